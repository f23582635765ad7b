//! Camera-to-ground projection geometry.
//!
//! World frame: `x`/`z` span the ground plane, `y` points up. A camera at
//! height `y > 0` looks along `+z` when azimuth and tilt are zero; tilt
//! rotates the view toward the ground (tilt `π/2` is a nadiral view). The
//! image plane sits at distance `f` (the focal length) from the optical
//! center, and sensor pixels are addressed directly in meters on the sensor,
//! so only the four physical corner offsets matter for the footprint.

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

/// Physical camera description: sensor half-extents and focal range.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraIntrinsics {
    /// Half of the sensor width, meters.
    pub sensor_half_width: f64,
    /// Half of the sensor height, meters.
    pub sensor_half_height: f64,
    /// Shortest focal length of the zoom range, meters.
    pub focal_min: f64,
    /// Longest focal length of the zoom range, meters.
    pub focal_max: f64,
}

impl CameraIntrinsics {
    pub fn new(
        sensor_half_width: f64,
        sensor_half_height: f64,
        focal_min: f64,
        focal_max: f64,
    ) -> Result<Self> {
        if !(sensor_half_width > 0.0 && sensor_half_height > 0.0) {
            return Err(Error::Config("sensor half-extents must be positive".into()));
        }
        if !(0.0 < focal_min && focal_min < focal_max) {
            return Err(Error::Config("focal range must satisfy 0 < min < max".into()));
        }
        Ok(Self { sensor_half_width, sensor_half_height, focal_min, focal_max })
    }

    /// The four sensor corner offsets in meters, counterclockwise starting
    /// from (+w, +h).
    pub fn image_corners(&self) -> [[f64; 2]; 4] {
        let w = self.sensor_half_width;
        let h = self.sensor_half_height;
        [[w, h], [-w, h], [-w, -h], [w, -h]]
    }
}

impl Default for CameraIntrinsics {
    /// A 6.4 mm x 4.8 mm sensor with a 4-48 mm zoom range.
    fn default() -> Self {
        Self {
            sensor_half_width: 3.2e-3,
            sensor_half_height: 2.4e-3,
            focal_min: 4.0e-3,
            focal_max: 48.0e-3,
        }
    }
}

/// Camera placement: world position, azimuth, tilt and focal length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    /// Optical center in world coordinates; `position.y` is the height above
    /// the ground plane and must be positive.
    pub position: Vector3<f64>,
    /// Azimuth in radians: rotation about the world `y` axis, zero facing `+z`.
    pub azimuth: f64,
    /// Tilt in radians, `[0, π/2]`: 0 looks at the horizon, `π/2` straight down.
    pub tilt: f64,
    /// Focal length in meters.
    pub focal: f64,
}

/// A footprint corner (or any ground-plane point) in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundPoint {
    pub x: f64,
    pub z: f64,
}

/// The ground-plane quadrilateral observed by a camera.
///
/// `valid` is false whenever any sensor corner fails to project below the
/// horizon; invalid footprints carry zero area and rasterize to nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    /// Ground projections of the sensor corners, in image-corner order.
    pub corners: [GroundPoint; 4],
    /// Shoelace area of the quadrilateral in square meters (0 when invalid).
    pub area: f64,
    pub valid: bool,
}

impl Footprint {
    pub fn invalid() -> Self {
        Self { corners: [GroundPoint { x: 0.0, z: 0.0 }; 4], area: 0.0, valid: false }
    }
}

/// A ground grid: `width` columns along `x`, `height` rows along `z`,
/// square cells of `cell_size` meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
}

impl GridSpec {
    pub fn new(width: usize, height: usize, cell_size: f64) -> Result<Self> {
        if cell_size <= 0.0 {
            return Err(Error::Config("cell size must be positive".into()));
        }
        Ok(Self { width, height, cell_size })
    }

    /// Center of cell `(row, col)` in world coordinates.
    pub fn cell_center(&self, row: usize, col: usize) -> GroundPoint {
        GroundPoint {
            x: (col as f64 + 0.5) * self.cell_size,
            z: (row as f64 + 0.5) * self.cell_size,
        }
    }
}

/// Grid cells covered by a footprint, stored as sorted linear indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSet {
    width: usize,
    height: usize,
    cells: Vec<u32>,
}

impl CellSet {
    pub fn new(width: usize, height: usize, mut cells: Vec<u32>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        debug_assert!(cells.iter().all(|&c| (c as usize) < width * height));
        Self { width, height, cells }
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, cells: Vec::new() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        let idx = (row * self.width + col) as u32;
        self.cells.binary_search(&idx).is_ok()
    }

    /// Iterates covered `(row, col)` pairs in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.cells.iter().map(move |&i| ((i as usize) / w, (i as usize) % w))
    }
}

/// The combined azimuth-tilt rotation, tilt applied first.
///
/// Tilt is a proper rotation about `x` oriented so that increasing tilt turns
/// the view toward the ground; azimuth rotates about `y`.
pub fn rotation_matrix(azimuth: f64, tilt: f64) -> Matrix3<f64> {
    let (sa, ca) = azimuth.sin_cos();
    let (st, ct) = tilt.sin_cos();
    let rot_azimuth = Matrix3::new(
        ca, 0.0, sa, //
        0.0, 1.0, 0.0, //
        -sa, 0.0, ca,
    );
    let rot_tilt = Matrix3::new(
        1.0, 0.0, 0.0, //
        0.0, ct, -st, //
        0.0, st, ct,
    );
    rot_azimuth * rot_tilt
}

// Rays this close to (or above) the horizon are rejected outright.
const HORIZON_EPS: f64 = 1e-12;

/// Projects a sensor point (meters on the image plane) onto the ground plane.
///
/// The sensor point `(px, py)` together with the focal length forms the
/// camera-frame ray `(px, py, f)`; after rotation, the ray from the camera
/// center is intersected with the `y = 0` plane. Fails with [`Error::Horizon`]
/// when the rotated ray points at or above the horizon.
pub fn project_pixel(pose: &Pose, pixel: [f64; 2]) -> Result<GroundPoint> {
    let rot = rotation_matrix(pose.azimuth, pose.tilt);
    project_pixel_rotated(pose, &rot, pixel)
}

/// [`project_pixel`] with a precomputed rotation matrix, for callers that
/// project several pixels of one pose.
pub fn project_pixel_rotated(pose: &Pose, rot: &Matrix3<f64>, pixel: [f64; 2]) -> Result<GroundPoint> {
    let ray = rot * Vector3::new(pixel[0], pixel[1], pose.focal);
    if ray.y > -HORIZON_EPS {
        return Err(Error::Horizon);
    }
    let t = -pose.position.y / ray.y;
    Ok(GroundPoint {
        x: pose.position.x + t * ray.x,
        z: pose.position.z + t * ray.z,
    })
}

/// Projects the four sensor corners, yielding the visual-coverage
/// quadrilateral. Any corner at or above the horizon invalidates the whole
/// footprint (zero area).
pub fn footprint(pose: &Pose, intrinsics: &CameraIntrinsics) -> Footprint {
    let rot = rotation_matrix(pose.azimuth, pose.tilt);
    let mut corners = [GroundPoint { x: 0.0, z: 0.0 }; 4];
    for (slot, pixel) in corners.iter_mut().zip(intrinsics.image_corners()) {
        match project_pixel_rotated(pose, &rot, pixel) {
            Ok(p) => *slot = p,
            Err(_) => return Footprint::invalid(),
        }
    }
    Footprint { corners, area: shoelace_area(&corners), valid: true }
}

fn shoelace_area(corners: &[GroundPoint; 4]) -> f64 {
    let mut twice = 0.0;
    for i in 0..4 {
        let a = corners[i];
        let b = corners[(i + 1) % 4];
        twice += a.x * b.z - b.x * a.z;
    }
    twice.abs() / 2.0
}

/// Rasterizes a footprint onto a grid: every cell whose center lies inside
/// the quadrilateral (boundary inclusive) is covered. Cells outside the grid
/// are clipped; invalid footprints cover nothing.
pub fn rasterize(fp: &Footprint, grid: &GridSpec) -> CellSet {
    if !fp.valid || grid.width == 0 || grid.height == 0 {
        return CellSet::empty(grid.width, grid.height);
    }
    // Normalize orientation so the inside test can require cross >= 0.
    let mut quad = fp.corners;
    if signed_area(&quad) < 0.0 {
        quad.reverse();
    }

    let (mut min_x, mut max_x) = (quad[0].x, quad[0].x);
    let (mut min_z, mut max_z) = (quad[0].z, quad[0].z);
    for c in &quad[1..] {
        min_x = min_x.min(c.x);
        max_x = max_x.max(c.x);
        min_z = min_z.min(c.z);
        max_z = max_z.max(c.z);
    }
    let cs = grid.cell_size;
    // First/last cells whose centers can fall inside the bounding box.
    let col_lo = ((min_x / cs - 0.5).ceil().max(0.0)) as usize;
    let col_hi = (((max_x / cs - 0.5).floor()).min(grid.width as f64 - 1.0)).max(-1.0) as i64;
    let row_lo = ((min_z / cs - 0.5).ceil().max(0.0)) as usize;
    let row_hi = (((max_z / cs - 0.5).floor()).min(grid.height as f64 - 1.0)).max(-1.0) as i64;

    let mut cells = Vec::new();
    let mut row = row_lo as i64;
    while row <= row_hi {
        let mut col = col_lo as i64;
        while col <= col_hi {
            let p = grid.cell_center(row as usize, col as usize);
            if point_in_convex_ccw(&quad, p) {
                cells.push((row as usize * grid.width + col as usize) as u32);
            }
            col += 1;
        }
        row += 1;
    }
    CellSet::new(grid.width, grid.height, cells)
}

fn signed_area(quad: &[GroundPoint; 4]) -> f64 {
    let mut twice = 0.0;
    for i in 0..4 {
        let a = quad[i];
        let b = quad[(i + 1) % 4];
        twice += a.x * b.z - b.x * a.z;
    }
    twice
}

/// Point-in-polygon for a counterclockwise convex quad, boundary inclusive.
fn point_in_convex_ccw(quad: &[GroundPoint; 4], p: GroundPoint) -> bool {
    for i in 0..4 {
        let a = quad[i];
        let b = quad[(i + 1) % 4];
        let cross = (b.x - a.x) * (p.z - a.z) - (b.z - a.z) * (p.x - a.x);
        if cross < 0.0 {
            return false;
        }
    }
    true
}
