use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::geometry::mesh::Mesh;

/// R³ lattice of occupancy values in [0, 1]. Values live at cell centers:
/// cell (i, j, k) is centered at `origin + (index + 0.5) * spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub resolution: usize,
    pub origin: Point3<f64>,
    pub spacing: f64,
    /// Row-major, x slowest: `values[(x * R + y) * R + z]`.
    pub values: Vec<f64>,
    /// Set when the three parity rays disagreed on more than 5% of cells,
    /// which indicates a non-watertight input.
    pub parity_warning: bool,
}

impl OccupancyGrid {
    pub fn zeros(resolution: usize, origin: Point3<f64>, spacing: f64) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::Validation("grid resolution must be >= 2".into()));
        }
        if !(spacing > 0.0) {
            return Err(Error::Validation("grid spacing must be positive".into()));
        }
        Ok(OccupancyGrid {
            resolution,
            origin,
            spacing,
            values: vec![0.0; resolution * resolution * resolution],
            parity_warning: false,
        })
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (x * self.resolution + y) * self.resolution + z
    }

    #[inline]
    pub fn value(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[self.index(x, y, z)]
    }

    pub fn cell_center(&self, x: usize, y: usize, z: usize) -> Point3<f64> {
        Point3::new(
            self.origin.x + (x as f64 + 0.5) * self.spacing,
            self.origin.y + (y as f64 + 0.5) * self.spacing,
            self.origin.z + (z as f64 + 0.5) * self.spacing,
        )
    }

    pub fn occupied_count(&self) -> usize {
        self.values.iter().filter(|&&v| v >= 0.5).count()
    }

    pub fn same_lattice(&self, other: &OccupancyGrid) -> bool {
        self.resolution == other.resolution
            && (self.spacing - other.spacing).abs() <= 1e-12
            && (self.origin - other.origin).norm() <= 1e-12
    }

    /// 8-corner trilinear blend over the cell-center lattice. Queries outside
    /// the lattice are clamped to the boundary; the flag reports clamping.
    pub fn trilinear(&self, p: Point3<f64>) -> (f64, bool) {
        let (base, frac, clamped) = lattice_weights(self.resolution, &self.origin, self.spacing, p);
        let [bx, by, bz] = base;
        let [fx, fy, fz] = frac;
        let mut acc = 0.0;
        for (dx, wx) in [(0, 1.0 - fx), (1, fx)] {
            for (dy, wy) in [(0, 1.0 - fy), (1, fy)] {
                for (dz, wz) in [(0, 1.0 - fz), (1, fz)] {
                    acc += wx * wy * wz * self.value(bx + dx, by + dy, bz + dz);
                }
            }
        }
        (acc, clamped)
    }

    pub fn trilinear_value(&self, p: Point3<f64>) -> f64 {
        self.trilinear(p).0
    }

    /// Writes `OCCGRID v1 R ox oy oz spacing` header plus row-major 0/1 bytes
    /// (binarized at 0.5).
    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(
            w,
            "OCCGRID v1 {} {} {} {} {}",
            self.resolution, self.origin.x, self.origin.y, self.origin.z, self.spacing
        )?;
        let bytes: Vec<u8> = self
            .values
            .iter()
            .map(|&v| if v >= 0.5 { 1u8 } else { 0u8 })
            .collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut reader = BufReader::new(file);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 7 || fields[0] != "OCCGRID" || fields[1] != "v1" {
            return Err(Error::Parse(format!("bad OCCGRID header: {header:?}")));
        }
        let resolution: usize = fields[2]
            .parse()
            .map_err(|e| Error::Parse(format!("bad resolution: {e}")))?;
        let mut nums = [0.0f64; 4];
        for (i, f) in fields[3..7].iter().enumerate() {
            nums[i] = f
                .parse()
                .map_err(|e| Error::Parse(format!("bad header number {f:?}: {e}")))?;
        }
        let mut grid = OccupancyGrid::zeros(
            resolution,
            Point3::new(nums[0], nums[1], nums[2]),
            nums[3],
        )?;
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        if bytes.len() != grid.values.len() {
            return Err(Error::Parse(format!(
                "expected {} occupancy bytes, found {}",
                grid.values.len(),
                bytes.len()
            )));
        }
        for (v, b) in grid.values.iter_mut().zip(&bytes) {
            *v = match b {
                0 => 0.0,
                1 => 1.0,
                other => return Err(Error::Parse(format!("bad occupancy byte {other}"))),
            };
        }
        Ok(grid)
    }
}

/// Base cell, per-axis fractions, and a clamp flag for trilinear sampling on
/// a cell-center lattice. Shared by the occupancy grid and feature volumes.
pub(crate) fn lattice_weights(
    resolution: usize,
    origin: &Point3<f64>,
    spacing: f64,
    p: Point3<f64>,
) -> ([usize; 3], [f64; 3], bool) {
    let mut base = [0usize; 3];
    let mut frac = [0.0f64; 3];
    let mut clamped = false;
    let max_u = (resolution - 1) as f64;
    for a in 0..3 {
        let mut u = (p[a] - origin[a]) / spacing - 0.5;
        if u < 0.0 {
            u = 0.0;
            clamped = true;
        } else if u > max_u {
            u = max_u;
            clamped = true;
        }
        let b = (u.floor() as usize).min(resolution - 2);
        base[a] = b;
        frac[a] = u - b as f64;
    }
    (base, frac, clamped)
}

/// Voxelizes a watertight mesh over the normalized domain [-0.5, 0.5]³.
/// A cell is occupied iff its center is inside the mesh, decided by majority
/// over three axis-aligned parity rays. Parity disagreement on more than 5%
/// of cells sets the `parity_warning` flag instead of failing.
pub fn voxelize(mesh: &Mesh, resolution: usize) -> Result<OccupancyGrid> {
    mesh.validate()?;
    if resolution < 2 {
        return Err(Error::Validation("voxelize resolution must be >= 2".into()));
    }
    let r = resolution;
    let origin = Point3::new(-0.5, -0.5, -0.5);
    let spacing = 1.0 / r as f64;
    let mut votes = vec![0u8; r * r * r];

    for axis in 0..3 {
        accumulate_axis_votes(mesh, axis, r, &origin, spacing, &mut votes);
    }

    let mut grid = OccupancyGrid::zeros(r, origin, spacing)?;
    let mut disagree = 0usize;
    for (cell, &v) in votes.iter().enumerate() {
        if v >= 2 {
            grid.values[cell] = 1.0;
        }
        if v == 1 || v == 2 {
            disagree += 1;
        }
    }
    grid.parity_warning = disagree as f64 > 0.05 * (r * r * r) as f64;
    Ok(grid)
}

/// One parity pass: casts a ray column along `axis` through every (u, v)
/// cell-center pair and flips votes for cells with an odd crossing count
/// above them. Triangles are binned by their projected bounding rectangle.
fn accumulate_axis_votes(
    mesh: &Mesh,
    axis: usize,
    r: usize,
    origin: &Point3<f64>,
    spacing: f64,
    votes: &mut [u8],
) {
    let (u, v) = match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); r * r];
    let coord_to_cell = |c: f64, o: f64| -> (isize, isize) {
        // Cell whose center is just above/below the coordinate.
        let exact = (c - o) / spacing - 0.5;
        (exact.floor() as isize, exact.ceil() as isize)
    };
    for (ti, tri) in mesh.triangles.iter().enumerate() {
        let mut umin = f64::INFINITY;
        let mut umax = f64::NEG_INFINITY;
        let mut vmin = f64::INFINITY;
        let mut vmax = f64::NEG_INFINITY;
        for &vi in tri {
            let p = mesh.vertices[vi];
            umin = umin.min(p[u]);
            umax = umax.max(p[u]);
            vmin = vmin.min(p[v]);
            vmax = vmax.max(p[v]);
        }
        let (iu0, _) = coord_to_cell(umin, origin[u]);
        let (_, iu1) = coord_to_cell(umax, origin[u]);
        let (iv0, _) = coord_to_cell(vmin, origin[v]);
        let (_, iv1) = coord_to_cell(vmax, origin[v]);
        for iu in iu0.max(0)..=iu1.min(r as isize - 1) {
            for iv in iv0.max(0)..=iv1.min(r as isize - 1) {
                bins[iu as usize * r + iv as usize].push(ti as u32);
            }
        }
    }

    let mut crossings: Vec<f64> = Vec::new();
    for iu in 0..r {
        for iv in 0..r {
            let bin = &bins[iu * r + iv];
            if bin.is_empty() {
                continue;
            }
            let mut probe = Point3::origin();
            probe[u] = origin[u] + (iu as f64 + 0.5) * spacing;
            probe[v] = origin[v] + (iv as f64 + 0.5) * spacing;
            probe[axis] = 0.0;
            crossings.clear();
            for &ti in bin {
                let [pa, pb, pc] = mesh.triangle_points(ti as usize);
                if let Some(c) = crate::geometry::mesh::axis_line_hit(probe, axis, u, v, &pa, &pb, &pc)
                {
                    crossings.push(c);
                }
            }
            if crossings.is_empty() {
                continue;
            }
            crossings.sort_unstable_by(f64::total_cmp);
            for k in 0..r {
                let c_axis = origin[axis] + (k as f64 + 0.5) * spacing;
                let above = crossings.len() - crossings.partition_point(|&x| x <= c_axis);
                if above % 2 == 1 {
                    let mut idx = [0usize; 3];
                    idx[axis] = k;
                    idx[u] = iu;
                    idx[v] = iv;
                    votes[(idx[0] * r + idx[1]) * r + idx[2]] += 1;
                }
            }
        }
    }
}

/// |intersection| / |union| of two grids binarized at 0.5. Two empty grids
/// compare as identical: IoU 1.
pub fn volumetric_iou(g1: &OccupancyGrid, g2: &OccupancyGrid) -> Result<f64> {
    if !g1.same_lattice(g2) {
        return Err(Error::GridMismatch);
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    for (&a, &b) in g1.values.iter().zip(&g2.values) {
        let (a, b) = (a >= 0.5, b >= 0.5);
        if a && b {
            inter += 1;
        }
        if a || b {
            union += 1;
        }
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::box_mesh;

    fn centered_cube(side: f64) -> Mesh {
        let h = side / 2.0;
        box_mesh(Point3::new(-h, -h, -h), Point3::new(h, h, h))
    }

    #[test]
    fn voxelize_centered_cube_counts() {
        // Analytic: centers at (2i-7)/16 for R=8; |c| <= 0.25 keeps 4 per axis.
        let grid = voxelize(&centered_cube(0.5), 8).unwrap();
        assert_eq!(grid.occupied_count(), 64);
        assert!(!grid.parity_warning);
        // Brute-force oracle: per-cell majority parity from the mesh itself.
        let mesh = centered_cube(0.5);
        for x in 0..8 {
            for y in 0..8 {
                for z in 0..8 {
                    let inside = mesh.contains(grid.cell_center(x, y, z));
                    assert_eq!(grid.value(x, y, z) >= 0.5, inside, "cell {x},{y},{z}");
                }
            }
        }
    }

    #[test]
    fn voxelize_corner_cell_empty() {
        let grid = voxelize(&centered_cube(0.5), 8).unwrap();
        assert_eq!(grid.value(0, 0, 0), 0.0);
    }

    #[test]
    fn voxelize_sphere_volume_fraction() {
        let mesh = crate::geometry::icosphere(0.4, 3);
        let grid = voxelize(&mesh, 32).unwrap();
        let frac = grid.occupied_count() as f64 / (32.0f64.powi(3));
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * 0.4f64.powi(3);
        assert!(
            (frac - analytic).abs() < 0.1 * analytic,
            "fraction {frac} vs analytic {analytic}"
        );
    }

    #[test]
    fn trilinear_at_node_and_cell_center() {
        let mut grid = OccupancyGrid::zeros(4, Point3::new(-0.5, -0.5, -0.5), 0.25).unwrap();
        for (i, v) in grid.values.iter_mut().enumerate() {
            *v = (i % 7) as f64 / 7.0;
        }
        // Lattice node: exact stored value.
        let p = grid.cell_center(1, 2, 3);
        let (val, clamped) = grid.trilinear(p);
        assert!(!clamped);
        assert!((val - grid.value(1, 2, 3)).abs() < 1e-15);
        // Midpoint between 8 nodes: mean of the corner values.
        let q = nalgebra::center(&grid.cell_center(1, 1, 1), &grid.cell_center(2, 2, 2));
        let mut mean = 0.0;
        for dx in 0..2 {
            for dy in 0..2 {
                for dz in 0..2 {
                    mean += grid.value(1 + dx, 1 + dy, 1 + dz);
                }
            }
        }
        mean /= 8.0;
        assert!((grid.trilinear_value(q) - mean).abs() < 1e-14);
    }

    #[test]
    fn trilinear_matches_lerp_composition() {
        // Independent oracle: composition of single-axis lerps.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut grid = OccupancyGrid::zeros(4, Point3::new(-0.5, -0.5, -0.5), 0.25).unwrap();
        for v in grid.values.iter_mut() {
            *v = rng.gen::<f64>();
        }
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        for _ in 0..100 {
            let p = Point3::new(
                rng.gen_range(-0.37..0.37),
                rng.gen_range(-0.37..0.37),
                rng.gen_range(-0.37..0.37),
            );
            let (base, frac, clamped) = lattice_weights(4, &grid.origin, 0.25, p);
            assert!(!clamped);
            let c = |dx: usize, dy: usize, dz: usize| {
                grid.value(base[0] + dx, base[1] + dy, base[2] + dz)
            };
            let expect = lerp(
                lerp(
                    lerp(c(0, 0, 0), c(0, 0, 1), frac[2]),
                    lerp(c(0, 1, 0), c(0, 1, 1), frac[2]),
                    frac[1],
                ),
                lerp(
                    lerp(c(1, 0, 0), c(1, 0, 1), frac[2]),
                    lerp(c(1, 1, 0), c(1, 1, 1), frac[2]),
                    frac[1],
                ),
                frac[0],
            );
            assert!((grid.trilinear_value(p) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn trilinear_out_of_bounds_clamps_and_flags() {
        let mut grid = OccupancyGrid::zeros(4, Point3::new(-0.5, -0.5, -0.5), 0.25).unwrap();
        grid.values.iter_mut().for_each(|v| *v = 0.25);
        let (val, clamped) = grid.trilinear(Point3::new(5.0, 0.0, 0.0));
        assert!(clamped);
        assert!((val - 0.25).abs() < 1e-15);
    }

    #[test]
    fn iou_identity_disjoint_and_overlap() {
        let mut a = OccupancyGrid::zeros(4, Point3::new(-0.5, -0.5, -0.5), 0.25).unwrap();
        let mut b = a.clone();
        assert_eq!(volumetric_iou(&a, &b).unwrap(), 1.0); // both empty
        a.values[0] = 1.0;
        b.values[1] = 1.0;
        assert_eq!(volumetric_iou(&a, &b).unwrap(), 0.0);
        // 8-cell blob vs shifted copy overlapping in 4 cells: 4 / 12.
        let mut g1 = OccupancyGrid::zeros(4, Point3::new(-0.5, -0.5, -0.5), 0.25).unwrap();
        let mut g2 = g1.clone();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    g1.values[g1.index(x, y, z)] = 1.0;
                    g2.values[g2.index(x + 1, y, z)] = 1.0;
                }
            }
        }
        let iou = volumetric_iou(&g1, &g2).unwrap();
        assert!((iou - 4.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn iou_mismatched_lattice_errors() {
        let a = OccupancyGrid::zeros(4, Point3::new(-0.5, -0.5, -0.5), 0.25).unwrap();
        let b = OccupancyGrid::zeros(8, Point3::new(-0.5, -0.5, -0.5), 0.125).unwrap();
        assert!(matches!(volumetric_iou(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn voxelize_self_iou_is_one() {
        let grid = voxelize(&centered_cube(0.6), 16).unwrap();
        assert_eq!(volumetric_iou(&grid, &grid).unwrap(), 1.0);
    }

    #[test]
    fn occgrid_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.occ");
        let grid = voxelize(&centered_cube(0.5), 8).unwrap();
        grid.save(&path).unwrap();
        let back = OccupancyGrid::load(&path).unwrap();
        assert_eq!(grid.resolution, back.resolution);
        assert_eq!(grid.values, back.values);
        assert!((grid.spacing - back.spacing).abs() < 1e-15);
    }
}
