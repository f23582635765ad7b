//! Relevance maps, temporal masks and the coverage reward arithmetic.
//!
//! A [`RelevanceMap`] assigns each ground cell a static priority in `[0, 1]`.
//! A [`TemporalMask`] of the same shape decays under observation and recovers
//! over time; the product `M * T` is the temporal relevance map that drives
//! patrolling. Coverage quality of a camera state is its Constrained Observed
//! Relevance: the mask-weighted relevance summed inside the footprint, scaled
//! by a trapezoidal penalty on the footprint area.

mod io;

pub use io::{load_map, load_map_csv, save_map, save_map_csv};

use crate::geometry::{CellSet, Footprint, GridSpec};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Static per-cell priorities in `[0, 1]` on a square-celled grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceMap {
    width: usize,
    height: usize,
    cell_size: f64,
    values: Vec<f32>,
}

impl RelevanceMap {
    pub fn new(width: usize, height: usize, cell_size: f64, values: Vec<f32>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Format(format!(
                "map payload holds {} values for a {}x{} grid",
                values.len(),
                width,
                height
            )));
        }
        if cell_size <= 0.0 {
            return Err(Error::Config("cell size must be positive".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::Format("map values must lie in [0, 1]".into()));
        }
        Ok(Self { width, height, cell_size, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec { width: self.width, height: self.height, cell_size: self.cell_size }
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col] as f64
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Total static relevance over the whole map.
    pub fn total(&self) -> f64 {
        self.values.iter().map(|&v| v as f64).sum()
    }

    /// Physical area of the mapped region in square meters.
    pub fn physical_area(&self) -> f64 {
        (self.width as f64 * self.cell_size) * (self.height as f64 * self.cell_size)
    }

    /// Builds a map as a max-normalized sum of isotropic Gaussian blobs.
    /// Blob centers and sigmas are in cell units; cell `(row, col)` samples
    /// the field at `(col, row)`.
    pub fn from_blobs(blobs: &[Blob], grid: &GridSpec) -> Result<Self> {
        let mut values = vec![0f64; grid.width * grid.height];
        for blob in blobs {
            let inv = 1.0 / (2.0 * blob.sigma * blob.sigma);
            for row in 0..grid.height {
                for col in 0..grid.width {
                    let dx = col as f64 - blob.center_x;
                    let dy = row as f64 - blob.center_y;
                    values[row * grid.width + col] += (-(dx * dx + dy * dy) * inv).exp();
                }
            }
        }
        let max = values.iter().cloned().fold(0.0f64, f64::max);
        let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
        let values = values.iter().map(|v| (v * scale) as f32).collect();
        Self::new(grid.width, grid.height, grid.cell_size, values)
    }
}

/// One Gaussian relevance blob with unit peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub center_x: f64,
    pub center_y: f64,
    pub sigma: f64,
}

/// Random-map generation ranges (blob count and blob sigma, in cells).
#[derive(Debug, Clone, PartialEq)]
pub struct MapGenConfig {
    pub blobs_min: usize,
    pub blobs_max: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Default for MapGenConfig {
    fn default() -> Self {
        Self { blobs_min: 3, blobs_max: 8, sigma_min: 3.0, sigma_max: 10.0 }
    }
}

/// Generates a random blob map, deterministically for a fixed seed.
pub fn generate_random_map(seed: u64, config: &MapGenConfig, grid: &GridSpec) -> Result<RelevanceMap> {
    if config.blobs_min == 0 || config.blobs_min > config.blobs_max {
        return Err(Error::Config("blob count range must be non-empty and positive".into()));
    }
    if !(config.sigma_min > 0.0 && config.sigma_min <= config.sigma_max) {
        return Err(Error::Config("sigma range must be non-empty and positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(config.blobs_min..=config.blobs_max);
    let blobs: Vec<Blob> = (0..count)
        .map(|_| Blob {
            center_x: rng.gen::<f64>() * (grid.width.saturating_sub(1)) as f64,
            center_y: rng.gen::<f64>() * (grid.height.saturating_sub(1)) as f64,
            sigma: config.sigma_min + rng.gen::<f64>() * (config.sigma_max - config.sigma_min),
        })
        .collect();
    RelevanceMap::from_blobs(&blobs, grid)
}

/// Per-cell observation decay state in `[0, 1]`; all ones at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalMask {
    width: usize,
    height: usize,
    values: Vec<f64>,
    t: u64,
}

impl TemporalMask {
    /// Fresh mask (all ones) matching the map shape.
    pub fn ones_like(map: &RelevanceMap) -> Self {
        Self {
            width: map.width,
            height: map.height,
            values: vec![1.0; map.width * map.height],
            t: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Steps since creation.
    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Advances the mask one step for a single drone: covered cells decay by
    /// `k * delta_minus` (clamped at 0), uncovered cells recover by
    /// `delta_plus` (clamped at 1).
    pub fn update_single(&mut self, cells: &CellSet, k_value: f64, decay: &DecayParams) {
        self.update_swarm(&[(cells, k_value)], decay);
    }

    /// Advances the mask one step for a whole swarm. A cell covered by several
    /// drones decays by the sum of their `k * delta_minus` contributions; a
    /// cell covered by nobody recovers by `delta_plus`. Cells covered only by
    /// zero-penalty drones stay put: they follow the covered branch with a
    /// zero decrement and receive no recovery.
    pub fn update_swarm(&mut self, coverage: &[(&CellSet, f64)], decay: &DecayParams) {
        let mut decrement = vec![0.0f64; self.values.len()];
        let mut covered = vec![false; self.values.len()];
        for (cells, k_value) in coverage {
            debug_assert_eq!((cells.width(), cells.height()), (self.width, self.height));
            for (row, col) in cells.iter() {
                let idx = row * self.width + col;
                covered[idx] = true;
                decrement[idx] += k_value * decay.delta_minus;
            }
        }
        for (idx, v) in self.values.iter_mut().enumerate() {
            if covered[idx] {
                *v = (*v - decrement[idx]).max(0.0);
            } else {
                *v = (*v + decay.delta_plus).min(1.0);
            }
        }
        self.t += 1;
    }
}

/// Trapezoidal penalty on footprint area: zero below `a0`, rising to one on
/// `[a0, a1]`, one on `[a1, a2]`, falling to zero on `[a2, a3]`, zero above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl PenaltyParams {
    pub fn new(a0: f64, a1: f64, a2: f64, a3: f64) -> Result<Self> {
        if !(0.0 <= a0 && a0 <= a1 && a1 <= a2 && a2 <= a3) {
            return Err(Error::Config("penalty breakpoints must satisfy 0 <= a0 <= a1 <= a2 <= a3".into()));
        }
        Ok(Self { a0, a1, a2, a3 })
    }

    /// Breakpoints as fractions of a total map area.
    pub fn from_fractions(map_area: f64, fractions: [f64; 4]) -> Result<Self> {
        Self::new(
            fractions[0] * map_area,
            fractions[1] * map_area,
            fractions[2] * map_area,
            fractions[3] * map_area,
        )
    }

    /// Default breakpoints: 0.5%, 2%, 10% and 20% of the map area. Keeping
    /// `a3 <= 2 * a2` makes oversized footprints strictly worse than plateau
    /// ones even on uniform relevance (`k(x) * x` peaks at `a3 / 2`).
    pub fn default_for_area(map_area: f64) -> Self {
        Self::from_fractions(map_area, [0.005, 0.02, 0.10, 0.20]).expect("valid fractions")
    }

    /// The penalty factor `k(area)` in `[0, 1]`.
    pub fn evaluate(&self, area: f64) -> f64 {
        debug_assert!(area >= 0.0);
        if area < self.a0 {
            0.0
        } else if area < self.a1 {
            (area - self.a0) / (self.a1 - self.a0)
        } else if area <= self.a2 {
            1.0
        } else if area < self.a3 {
            (self.a3 - area) / (self.a3 - self.a2)
        } else {
            0.0
        }
    }
}

/// Observation recovery and decay rates per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    /// Mask units removed per step from covered cells (before the `k` factor).
    pub delta_minus: f64,
    /// Mask units restored per step to uncovered cells.
    pub delta_plus: f64,
}

impl DecayParams {
    pub fn new(delta_minus: f64, delta_plus: f64) -> Result<Self> {
        if !(delta_minus > 0.0 && delta_plus > 0.0 && delta_plus < delta_minus) {
            return Err(Error::Config("decay requires 0 < delta_plus < delta_minus".into()));
        }
        Ok(Self { delta_minus, delta_plus })
    }
}

impl Default for DecayParams {
    fn default() -> Self {
        Self { delta_minus: 0.1, delta_plus: 0.005 }
    }
}

/// Mask-weighted relevance summed over the covered cells.
pub fn observed_relevance(map: &RelevanceMap, mask: &TemporalMask, cells: &CellSet) -> Result<f64> {
    if (map.width, map.height) != (mask.width, mask.height) {
        return Err(Error::ShapeMismatch {
            expected_w: map.width,
            expected_h: map.height,
            got_w: mask.width,
            got_h: mask.height,
        });
    }
    if (cells.width(), cells.height()) != (map.width, map.height) {
        return Err(Error::ShapeMismatch {
            expected_w: map.width,
            expected_h: map.height,
            got_w: cells.width(),
            got_h: cells.height(),
        });
    }
    let mut sum = 0.0;
    for (row, col) in cells.iter() {
        sum += map.value(row, col) * mask.value(row, col);
    }
    Ok(sum)
}

/// Constrained Observed Relevance of a footprint: the area penalty times the
/// observed relevance. `cells` must be the rasterization of `fp` on the map
/// grid. Invalid footprints score zero.
pub fn cor(
    map: &RelevanceMap,
    mask: &TemporalMask,
    fp: &Footprint,
    cells: &CellSet,
    penalty: &PenaltyParams,
) -> Result<f64> {
    if !fp.valid {
        return Ok(0.0);
    }
    let k = penalty.evaluate(fp.area);
    if k == 0.0 {
        return Ok(0.0);
    }
    Ok(k * observed_relevance(map, mask, cells)?)
}

/// Global coverage `G = 1 - sum(M * T) / sum(M)`: 0 for a fresh mask, 1 when
/// every relevant cell is fully decayed. Requires matching shapes and a map
/// with positive total relevance.
pub fn global_coverage(map: &RelevanceMap, mask: &TemporalMask) -> f64 {
    assert_eq!((map.width, map.height), (mask.width, mask.height), "map/mask shape mismatch");
    let mut masked = 0.0;
    for (idx, &v) in map.values.iter().enumerate() {
        masked += v as f64 * mask.values[idx];
    }
    let total = map.total();
    assert!(total > 0.0, "global coverage needs positive total relevance");
    1.0 - masked / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{footprint, rasterize, CameraIntrinsics, Pose};
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::FRAC_PI_2;

    fn grid64() -> GridSpec {
        GridSpec { width: 64, height: 64, cell_size: 16.0 }
    }

    fn uniform_map(w: usize, h: usize, v: f32) -> RelevanceMap {
        RelevanceMap::new(w, h, 1.0, vec![v; w * h]).unwrap()
    }

    fn cellset(w: usize, h: usize, cells: &[(usize, usize)]) -> CellSet {
        CellSet::new(w, h, cells.iter().map(|&(r, c)| (r * w + c) as u32).collect())
    }

    #[test]
    fn same_seed_generates_identical_maps() {
        let cfg = MapGenConfig::default();
        let a = generate_random_map(99, &cfg, &grid64()).unwrap();
        let b = generate_random_map(99, &cfg, &grid64()).unwrap();
        assert_eq!(a.values(), b.values());
        let c = generate_random_map(100, &cfg, &grid64()).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn generated_maps_are_normalized() {
        let cfg = MapGenConfig::default();
        for seed in 0..20 {
            let map = generate_random_map(seed, &cfg, &grid64()).unwrap();
            let max = map.values().iter().cloned().fold(0.0f32, f32::max);
            assert_eq!(max, 1.0);
            assert!(map.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert!(map.total() > 0.0);
        }
    }

    #[test]
    fn single_blob_matches_gaussian_formula() {
        let grid = GridSpec { width: 32, height: 32, cell_size: 1.0 };
        let blob = Blob { center_x: 10.0, center_y: 10.0, sigma: 2.0 };
        let map = RelevanceMap::from_blobs(&[blob], &grid).unwrap();
        assert_eq!(map.value(10, 10), 1.0);
        // Independent evaluation of the Gaussian at a few offsets.
        for (row, col) in [(10usize, 12usize), (13, 10), (8, 9), (15, 15)] {
            let d2 = (col as f64 - 10.0).powi(2) + (row as f64 - 10.0).powi(2);
            let expect = (-d2 / (2.0 * 4.0)).exp();
            assert_relative_eq!(map.value(row, col), expect, max_relative = 1e-6);
        }
        // Radially monotone: value decreases along a ray from the center.
        for r in 11..20 {
            assert!(map.value(r, 10) < map.value(r - 1, 10));
        }
    }

    #[test]
    fn penalty_trapezoid_shape() {
        let p = PenaltyParams::new(10.0, 20.0, 40.0, 80.0).unwrap();
        assert_eq!(p.evaluate(0.0), 0.0);
        assert_eq!(p.evaluate(9.999), 0.0);
        assert_eq!(p.evaluate(15.0), 0.5);
        assert_eq!(p.evaluate(20.0), 1.0);
        assert_eq!(p.evaluate(30.0), 1.0);
        assert_eq!(p.evaluate(40.0), 1.0);
        assert_eq!(p.evaluate(60.0), 0.5);
        assert_eq!(p.evaluate(80.0), 0.0);
        assert_eq!(p.evaluate(1e9), 0.0);
    }

    #[test]
    fn observed_relevance_uniform_and_empty() {
        let map = uniform_map(16, 16, 1.0);
        let mask = TemporalMask::ones_like(&map);
        let cells = cellset(16, 16, &(0..25).map(|i| (i / 5, i % 5)).collect::<Vec<_>>());
        assert_eq!(observed_relevance(&map, &mask, &cells).unwrap(), 25.0);
        let empty = CellSet::empty(16, 16);
        assert_eq!(observed_relevance(&map, &mask, &empty).unwrap(), 0.0);
    }

    #[test]
    fn observed_relevance_matches_scalar_loop() {
        let grid = GridSpec { width: 24, height: 24, cell_size: 2.0 };
        let map = generate_random_map(5, &MapGenConfig::default(), &grid).unwrap();
        let mut mask = TemporalMask::ones_like(&map);
        let mut rng = crate::rng::stream(77, crate::rng::domain::EVAL, 1);
        for v in mask.values.iter_mut() {
            *v = rng.gen::<f64>();
        }
        let picked: Vec<(usize, usize)> =
            (0..120).map(|_| (rng.gen_range(0..24), rng.gen_range(0..24))).collect();
        let cells = cellset(24, 24, &picked);
        let mut expect = 0.0;
        for (row, col) in cells.iter() {
            expect += map.value(row, col) * mask.value(row, col);
        }
        assert_eq!(observed_relevance(&map, &mask, &cells).unwrap(), expect);
    }

    #[test]
    fn observed_relevance_rejects_shape_mismatch() {
        let map = uniform_map(8, 8, 0.5);
        let other = uniform_map(9, 8, 0.5);
        let mask = TemporalMask::ones_like(&other);
        let cells = CellSet::empty(8, 8);
        assert!(matches!(
            observed_relevance(&map, &mask, &cells),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn cor_zero_for_invalid_footprint_and_plateau_passthrough() {
        let map = uniform_map(16, 16, 1.0);
        let mask = TemporalMask::ones_like(&map);
        let penalty = PenaltyParams::new(1.0, 2.0, 10.0, 20.0).unwrap();
        let invalid = crate::geometry::Footprint::invalid();
        let empty = CellSet::empty(16, 16);
        assert_eq!(cor(&map, &mask, &invalid, &empty, &penalty).unwrap(), 0.0);

        // Plateau-area footprint with observed relevance 5: COR equals 5.
        let fp = crate::geometry::Footprint {
            corners: [
                crate::geometry::GroundPoint { x: 0.0, z: 0.0 },
                crate::geometry::GroundPoint { x: 3.0, z: 0.0 },
                crate::geometry::GroundPoint { x: 3.0, z: 1.0 },
                crate::geometry::GroundPoint { x: 0.0, z: 1.0 },
            ],
            area: 3.0,
            valid: true,
        };
        let cells = cellset(16, 16, &[(0, 0), (0, 1), (0, 2), (1, 0), (1, 1)]);
        assert_eq!(cor(&map, &mask, &fp, &cells, &penalty).unwrap(), 5.0);
    }

    #[test]
    fn mask_update_single_branches() {
        let map = uniform_map(4, 4, 1.0);
        let decay = DecayParams { delta_minus: 0.1, delta_plus: 0.005 };

        // Uncovered cell at 1.0 stays clamped at 1.0.
        let mut mask = TemporalMask::ones_like(&map);
        mask.update_single(&CellSet::empty(4, 4), 1.0, &decay);
        assert_eq!(mask.value(0, 0), 1.0);
        assert_eq!(mask.time(), 1);

        // Covered cell at 0.5 with k=1 drops to 0.4.
        let mut mask = TemporalMask::ones_like(&map);
        mask.values[0] = 0.5;
        mask.update_single(&cellset(4, 4, &[(0, 0)]), 1.0, &decay);
        assert_relative_eq!(mask.value(0, 0), 0.4, epsilon = 1e-15);

        // Covered cell at 0.05 clamps to 0.
        let mut mask = TemporalMask::ones_like(&map);
        mask.values[0] = 0.05;
        mask.update_single(&cellset(4, 4, &[(0, 0)]), 1.0, &decay);
        assert_eq!(mask.value(0, 0), 0.0);
    }

    #[test]
    fn mask_update_swarm_sums_decrements() {
        let map = uniform_map(4, 4, 1.0);
        let decay = DecayParams { delta_minus: 0.1, delta_plus: 0.005 };
        let mut mask = TemporalMask::ones_like(&map);
        mask.values[5] = 0.5;
        let cells = cellset(4, 4, &[(1, 1)]);
        mask.update_swarm(&[(&cells, 1.0), (&cells, 1.0)], &decay);
        assert_relative_eq!(mask.value(1, 1), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn mask_update_swarm_zero_k_cell_is_frozen() {
        // Covered by a single k=0 drone: no decrement, and no recovery either,
        // because the cell sits inside a footprint.
        let map = uniform_map(4, 4, 1.0);
        let decay = DecayParams { delta_minus: 0.1, delta_plus: 0.005 };
        let mut mask = TemporalMask::ones_like(&map);
        mask.values[5] = 0.5;
        let covered = cellset(4, 4, &[(1, 1)]);
        mask.update_swarm(&[(&covered, 0.0)], &decay);
        assert_eq!(mask.value(1, 1), 0.5);
        // Its uncovered neighbors recover.
        assert_eq!(mask.value(0, 0), 1.0);
    }

    #[test]
    fn swarm_of_one_equals_single_update() {
        let map = uniform_map(8, 8, 1.0);
        let decay = DecayParams::default();
        let mut rng = crate::rng::stream(31, crate::rng::domain::EVAL, 2);
        for _ in 0..200 {
            let mut a = TemporalMask::ones_like(&map);
            for v in a.values.iter_mut() {
                *v = rng.gen::<f64>();
            }
            let mut b = a.clone();
            let picked: Vec<(usize, usize)> =
                (0..rng.gen_range(0..20)).map(|_| (rng.gen_range(0..8), rng.gen_range(0..8))).collect();
            let cells = cellset(8, 8, &picked);
            let k = rng.gen::<f64>();
            a.update_single(&cells, k, &decay);
            b.update_swarm(&[(&cells, k)], &decay);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn mask_values_stay_clamped_under_fuzzed_updates() {
        let map = uniform_map(8, 8, 1.0);
        let decay = DecayParams::default();
        let mut mask = TemporalMask::ones_like(&map);
        let mut rng = crate::rng::stream(32, crate::rng::domain::EVAL, 3);
        for step in 0..10_000 {
            let drones = rng.gen_range(1..=3);
            let sets: Vec<CellSet> = (0..drones)
                .map(|_| {
                    let picked: Vec<(usize, usize)> = (0..rng.gen_range(0..12))
                        .map(|_| (rng.gen_range(0..8), rng.gen_range(0..8)))
                        .collect();
                    cellset(8, 8, &picked)
                })
                .collect();
            let cov: Vec<(&CellSet, f64)> =
                sets.iter().map(|s| (s, rng.gen::<f64>())).collect();
            let before = mask.clone();
            mask.update_swarm(&cov, &decay);
            for idx in 0..64 {
                let v = mask.values[idx];
                assert!((0.0..=1.0).contains(&v), "value {v} escaped [0,1] at step {step}");
                let covered = cov.iter().any(|(s, _)| s.contains(idx / 8, idx % 8));
                if covered {
                    assert!(v <= before.values[idx], "covered cell increased");
                } else {
                    assert!(v >= before.values[idx], "uncovered cell decreased");
                }
            }
        }
        assert_eq!(mask.time(), 10_000);
    }

    #[test]
    fn stationary_drone_sees_strictly_negative_rewards() {
        // A drone hovering with a valid plateau footprint watches its COR
        // decay: every reward in the sequence is strictly negative.
        let grid = grid64();
        let map = generate_random_map(7, &MapGenConfig::default(), &grid).unwrap();
        let penalty = PenaltyParams::default_for_area(map.physical_area());
        let decay = DecayParams::default();
        let intr = CameraIntrinsics::default();
        let pose = Pose {
            position: Vector3::new(512.0, 180.0, 512.0),
            azimuth: 0.0,
            tilt: FRAC_PI_2,
            focal: intr.focal_min,
        };
        let fp = footprint(&pose, &intr);
        assert!(fp.valid);
        let k = penalty.evaluate(fp.area);
        assert!(k > 0.0, "fixture footprint must score a positive penalty factor");
        let cells = rasterize(&fp, &grid);
        let mut mask = TemporalMask::ones_like(&map);
        let mut prev = cor(&map, &mask, &fp, &cells, &penalty).unwrap();
        assert!(prev > 0.0);
        for _ in 0..5 {
            mask.update_single(&cells, k, &decay);
            let next = cor(&map, &mask, &fp, &cells, &penalty).unwrap();
            let reward = next - prev;
            assert!(reward < 0.0, "expected negative reward, got {reward}");
            prev = next;
        }
    }

    #[test]
    fn global_coverage_bounds() {
        let map = uniform_map(8, 8, 0.5);
        let mask = TemporalMask::ones_like(&map);
        assert_eq!(global_coverage(&map, &mask), 0.0);
        let mut zeroed = mask.clone();
        for v in zeroed.values.iter_mut() {
            *v = 0.0;
        }
        assert_eq!(global_coverage(&map, &zeroed), 1.0);
    }

    #[test]
    fn global_coverage_monotone_in_mask() {
        let grid = GridSpec { width: 16, height: 16, cell_size: 1.0 };
        let map = generate_random_map(3, &MapGenConfig::default(), &grid).unwrap();
        let mut mask = TemporalMask::ones_like(&map);
        let mut rng = crate::rng::stream(33, crate::rng::domain::EVAL, 4);
        for v in mask.values.iter_mut() {
            *v = rng.gen::<f64>();
        }
        let g = global_coverage(&map, &mask);
        for _ in 0..50 {
            let idx = rng.gen_range(0..mask.values.len());
            let mut raised = mask.clone();
            raised.values[idx] = (raised.values[idx] + 0.3).min(1.0);
            assert!(global_coverage(&map, &raised) <= g + 1e-15);
        }
    }

    proptest! {
        #[test]
        fn cor_is_scale_equivariant(scale in 0.01f32..1.0f32, seed in 0u64..50) {
            let grid = GridSpec { width: 32, height: 32, cell_size: 4.0 };
            let map = generate_random_map(seed, &MapGenConfig::default(), &grid).unwrap();
            let scaled = RelevanceMap::new(
                32, 32, 4.0,
                map.values().iter().map(|&v| v * scale).collect(),
            ).unwrap();
            let mask = TemporalMask::ones_like(&map);
            let penalty = PenaltyParams::default_for_area(map.physical_area());
            let intr = CameraIntrinsics::default();
            let pose = Pose {
                position: Vector3::new(64.0, 90.0, 64.0),
                azimuth: 0.7,
                tilt: 1.2,
                focal: intr.focal_min,
            };
            let fp = footprint(&pose, &intr);
            prop_assume!(fp.valid);
            let cells = rasterize(&fp, &grid);
            let base = cor(&map, &mask, &fp, &cells, &penalty).unwrap();
            let got = cor(&scaled, &mask, &fp, &cells, &penalty).unwrap();
            prop_assert!((got - scale as f64 * base).abs() <= 1e-9 * base.abs().max(1.0));
        }

        #[test]
        fn rewards_telescope_along_trajectories(seed in 0u64..30) {
            let grid = GridSpec { width: 32, height: 32, cell_size: 4.0 };
            let map = generate_random_map(seed, &MapGenConfig::default(), &grid).unwrap();
            let penalty = PenaltyParams::default_for_area(map.physical_area());
            let decay = DecayParams::default();
            let intr = CameraIntrinsics::default();
            let mut rng = crate::rng::stream(seed, crate::rng::domain::EVAL, 5);
            let mut mask = TemporalMask::ones_like(&map);

            let random_state = |rng: &mut rand_chacha::ChaCha8Rng| Pose {
                position: Vector3::new(
                    rng.gen::<f64>() * 128.0,
                    20.0 + rng.gen::<f64>() * 160.0,
                    rng.gen::<f64>() * 128.0,
                ),
                azimuth: rng.gen::<f64>() * std::f64::consts::TAU,
                tilt: rng.gen::<f64>() * FRAC_PI_2,
                focal: intr.focal_min + rng.gen::<f64>() * (intr.focal_max - intr.focal_min),
            };

            let mut pose = random_state(&mut rng);
            let mut fp = footprint(&pose, &intr);
            let mut cells = rasterize(&fp, &grid);
            let initial = cor(&map, &mask, &fp, &cells, &penalty).unwrap();
            let mut total = 0.0;
            let mut current = initial;
            for _ in 0..10 {
                pose = random_state(&mut rng);
                fp = footprint(&pose, &intr);
                cells = rasterize(&fp, &grid);
                let k = if fp.valid { penalty.evaluate(fp.area) } else { 0.0 };
                mask.update_single(&cells, k, &decay);
                let next = cor(&map, &mask, &fp, &cells, &penalty).unwrap();
                total += next - current;
                current = next;
            }
            prop_assert!((total - (current - initial)).abs() < 1e-9);
        }
    }
}
