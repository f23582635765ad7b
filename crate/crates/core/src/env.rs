//! The deterministic drone MDP.
//!
//! A drone state is six grid indices (position, height, heading, tilt, zoom),
//! each discretized into `disc` values. Ground coordinates `(x, y)` map onto
//! the world frame as `(x, height, y)`; the heading angle is measured from
//! the grid `x` axis, while the camera azimuth convention of [`crate::geometry`]
//! measures from `+z`, so decoding converts between the two. Movement is along
//! the heading ("front is where the camera points"), re-quantized to the index
//! grid, which can step both position indices at once for diagonal headings.

use crate::geometry::{footprint, rasterize, CameraIntrinsics, CellSet, Footprint, GridSpec, Pose};
use crate::relevance::{cor, DecayParams, PenaltyParams, RelevanceMap, TemporalMask};
use crate::{Error, Result};
use nalgebra::Vector3;
use rand::Rng;
use std::f64::consts::{FRAC_PI_2, TAU};

/// The 12 drone actions, with stable integer encoding `0..=11` in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Action {
    MoveForward = 0,
    MoveBackward = 1,
    MoveLeft = 2,
    MoveRight = 3,
    MoveUp = 4,
    MoveDown = 5,
    RotateLeft = 6,
    RotateRight = 7,
    TiltDown = 8,
    TiltUp = 9,
    ZoomIn = 10,
    ZoomOut = 11,
}

impl Action {
    pub const COUNT: usize = 12;

    pub const ALL: [Action; 12] = [
        Action::MoveForward,
        Action::MoveBackward,
        Action::MoveLeft,
        Action::MoveRight,
        Action::MoveUp,
        Action::MoveDown,
        Action::RotateLeft,
        Action::RotateRight,
        Action::TiltDown,
        Action::TiltUp,
        Action::ZoomIn,
        Action::ZoomOut,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Action::ALL.get(index).copied()
    }
}

/// A drone state as grid indices, each in `[0, disc)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DroneState {
    pub ix: u16,
    pub iy: u16,
    pub iz: u16,
    pub ipsi: u16,
    pub iphi: u16,
    pub ifocal: u16,
}

impl DroneState {
    pub fn new(ix: u16, iy: u16, iz: u16, ipsi: u16, iphi: u16, ifocal: u16) -> Self {
        Self { ix, iy, iz, ipsi, iphi, ifocal }
    }

    /// Uniformly random state over all valid index tuples.
    pub fn random<R: Rng>(rng: &mut R, config: &EnvConfig) -> Self {
        let d = config.disc as u16;
        Self {
            ix: rng.gen_range(0..d),
            iy: rng.gen_range(0..d),
            iz: rng.gen_range(0..d),
            ipsi: rng.gen_range(0..d),
            iphi: rng.gen_range(0..d),
            ifocal: rng.gen_range(0..d),
        }
    }

    fn in_range(&self, disc: usize) -> bool {
        let d = disc as u16;
        self.ix < d && self.iy < d && self.iz < d && self.ipsi < d && self.iphi < d && self.ifocal < d
    }
}

/// World geometry, discretization and reward parameters of the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    /// Side length of the square world, meters.
    pub world_side: f64,
    /// Ground grid resolution (cells per side).
    pub map_cells: usize,
    /// Flying height range, meters.
    pub z_min: f64,
    pub z_max: f64,
    /// Discretization count for every state parameter.
    pub disc: usize,
    /// Heading change per rotate action; `rotate_step * disc` must close a
    /// full turn.
    pub rotate_step: f64,
    pub intrinsics: CameraIntrinsics,
    pub penalty: PenaltyParams,
    pub decay: DecayParams,
    /// Steps per training episode.
    pub episode_len: usize,
    /// Observation window side, pixels.
    pub window_size: usize,
    /// Map cells per observation pixel.
    pub window_scale: f64,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.disc < 2 {
            return Err(Error::Config("disc must be at least 2".into()));
        }
        if (self.rotate_step * self.disc as f64 - TAU).abs() > 1e-9 {
            return Err(Error::Config("rotate_step * disc must equal 2*pi".into()));
        }
        if !(self.world_side > 0.0) || self.map_cells == 0 {
            return Err(Error::Config("world dimensions must be positive".into()));
        }
        if !(self.z_min > 0.0 && self.z_max > self.z_min) {
            return Err(Error::Config("height range must satisfy 0 < z_min < z_max".into()));
        }
        if self.episode_len == 0 {
            return Err(Error::Config("episode length must be positive".into()));
        }
        if self.window_size == 0 || !(self.window_scale > 0.0) {
            return Err(Error::Config("observation window must be positive".into()));
        }
        Ok(())
    }

    /// The ground grid implied by the world side and cell count.
    pub fn grid(&self) -> GridSpec {
        GridSpec {
            width: self.map_cells,
            height: self.map_cells,
            cell_size: self.world_side / self.map_cells as f64,
        }
    }

    /// Heading angle encoded by a heading index.
    pub fn heading(&self, ipsi: u16) -> f64 {
        ipsi as f64 * self.rotate_step
    }
}

impl Default for EnvConfig {
    /// 1024 m world on a 64x64 grid, heights 20-200 m, 32 steps per parameter.
    fn default() -> Self {
        let world_side = 1024.0;
        let disc = 32usize;
        Self {
            world_side,
            map_cells: 64,
            z_min: 20.0,
            z_max: 200.0,
            disc,
            rotate_step: TAU / disc as f64,
            intrinsics: CameraIntrinsics::default(),
            penalty: PenaltyParams::default_for_area(world_side * world_side),
            decay: DecayParams::default(),
            episode_len: 20,
            window_size: 64,
            window_scale: 1.0,
        }
    }
}

/// Decodes grid indices into a physical camera pose.
///
/// Positions map to cell-step centers, height and focal length interpolate
/// their ranges linearly, tilt spans `[0, pi/2]` with the last index exactly
/// nadiral, and the heading wraps every `disc` steps. The pose azimuth is
/// `pi/2 - heading`: the heading is measured from the `x` axis, the camera
/// frame measures azimuth from `+z`, and the two describe the same direction.
pub fn decode_state(state: &DroneState, config: &EnvConfig) -> Pose {
    let d = config.disc as f64;
    let step = config.world_side / d;
    let gx = (state.ix as f64 + 0.5) * step;
    let gy = (state.iy as f64 + 0.5) * step;
    let height = config.z_min
        + state.iz as f64 * (config.z_max - config.z_min) / (d - 1.0);
    let heading = config.heading(state.ipsi % config.disc as u16);
    let tilt = state.iphi as f64 * FRAC_PI_2 / (d - 1.0);
    let focal = config.intrinsics.focal_min
        + state.ifocal as f64 * (config.intrinsics.focal_max - config.intrinsics.focal_min)
            / (d - 1.0);
    Pose {
        position: Vector3::new(gx, height, gy),
        azimuth: (FRAC_PI_2 - heading).rem_euclid(TAU),
        tilt,
        focal,
    }
}

/// Applies one action. Position moves displace one cell-step along the
/// heading frame and re-quantize to the nearest indices; non-cyclic indices
/// clamp at their range ends (the action degrades to a positional no-op),
/// while the heading index wraps.
pub fn apply_action(state: &DroneState, action: Action, config: &EnvConfig) -> DroneState {
    let d = config.disc as u16;
    let mut next = *state;
    let heading = config.heading(state.ipsi);
    let (sin, cos) = heading.sin_cos();
    match action {
        Action::MoveForward => translate(&mut next, cos, sin, d),
        Action::MoveBackward => translate(&mut next, -cos, -sin, d),
        // Lateral moves share the turn sense of the rotate actions.
        Action::MoveLeft => translate(&mut next, sin, -cos, d),
        Action::MoveRight => translate(&mut next, -sin, cos, d),
        Action::MoveUp => next.iz = (state.iz + 1).min(d - 1),
        Action::MoveDown => next.iz = state.iz.saturating_sub(1),
        Action::RotateLeft => next.ipsi = (state.ipsi + d - 1) % d,
        Action::RotateRight => next.ipsi = (state.ipsi + 1) % d,
        Action::TiltDown => next.iphi = (state.iphi + 1).min(d - 1),
        Action::TiltUp => next.iphi = state.iphi.saturating_sub(1),
        Action::ZoomIn => next.ifocal = (state.ifocal + 1).min(d - 1),
        Action::ZoomOut => next.ifocal = state.ifocal.saturating_sub(1),
    }
    next
}

fn translate(state: &mut DroneState, dx: f64, dy: f64, d: u16) {
    let nx = state.ix as f64 + dx;
    let ny = state.iy as f64 + dy;
    state.ix = nx.round().clamp(0.0, (d - 1) as f64) as u16;
    state.iy = ny.round().clamp(0.0, (d - 1) as f64) as u16;
}

/// Minimum number of actions between two states: one per index step, with the
/// heading measured cyclically. (Diagonal re-quantized moves can occasionally
/// beat this by stepping both position indices at once; the metric counts
/// per-index steps, matching one action per parameter change.)
pub fn min_state_distance(a: &DroneState, b: &DroneState, config: &EnvConfig) -> u32 {
    let d = config.disc as i64;
    let lin = |x: u16, y: u16| (x as i64 - y as i64).unsigned_abs() as u32;
    let dpsi = (a.ipsi as i64 - b.ipsi as i64).rem_euclid(d);
    let cyc = dpsi.min(d - dpsi) as u32;
    lin(a.ix, b.ix) + lin(a.iy, b.iy) + lin(a.iz, b.iz) + cyc + lin(a.iphi, b.iphi)
        + lin(a.ifocal, b.ifocal)
}

/// Footprint and rasterized coverage of a drone state on a map grid.
pub fn state_coverage(
    state: &DroneState,
    config: &EnvConfig,
    grid: &GridSpec,
) -> (Footprint, CellSet) {
    let pose = decode_state(state, config);
    let fp = footprint(&pose, &config.intrinsics);
    let cells = rasterize(&fp, grid);
    (fp, cells)
}

/// A swarm mid-episode: drone states plus the shared temporal mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    drones: Vec<DroneState>,
    mask: TemporalMask,
}

impl SwarmState {
    /// Starts an episode at `t = 0` with a fresh all-ones mask.
    pub fn new(drones: Vec<DroneState>, map: &RelevanceMap, config: &EnvConfig) -> Result<Self> {
        if drones.is_empty() {
            return Err(Error::Config("a swarm needs at least one drone".into()));
        }
        if drones.iter().any(|s| !s.in_range(config.disc)) {
            return Err(Error::Config("drone state index out of range".into()));
        }
        Ok(Self { drones, mask: TemporalMask::ones_like(map) })
    }

    pub fn drones(&self) -> &[DroneState] {
        &self.drones
    }

    pub fn mask(&self) -> &TemporalMask {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.drones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drones.is_empty()
    }

    pub fn time(&self) -> u64 {
        self.mask.time()
    }
}

/// Advances the swarm one step: scores every drone against the current mask,
/// applies all actions simultaneously, updates the shared mask once with the
/// new footprints, and rewards each drone with its COR change.
pub fn step_swarm(
    swarm: &mut SwarmState,
    actions: &[Action],
    map: &RelevanceMap,
    config: &EnvConfig,
) -> Result<Vec<f64>> {
    if actions.len() != swarm.drones.len() {
        return Err(Error::ActionCountMismatch {
            actions: actions.len(),
            drones: swarm.drones.len(),
        });
    }
    let grid = map.grid();
    let mut before = Vec::with_capacity(swarm.drones.len());
    for state in &swarm.drones {
        let (fp, cells) = state_coverage(state, config, &grid);
        before.push(cor(map, &swarm.mask, &fp, &cells, &config.penalty)?);
    }

    let next: Vec<DroneState> = swarm
        .drones
        .iter()
        .zip(actions)
        .map(|(state, &action)| apply_action(state, action, config))
        .collect();

    let coverage: Vec<(Footprint, CellSet)> =
        next.iter().map(|s| state_coverage(s, config, &grid)).collect();
    let weighted: Vec<(&CellSet, f64)> = coverage
        .iter()
        .map(|(fp, cells)| {
            let k = if fp.valid { config.penalty.evaluate(fp.area) } else { 0.0 };
            (cells, k)
        })
        .collect();
    swarm.mask.update_swarm(&weighted, &config.decay);

    let mut rewards = Vec::with_capacity(next.len());
    for (i, (fp, cells)) in coverage.iter().enumerate() {
        let after = cor(map, &swarm.mask, fp, cells, &config.penalty)?;
        rewards.push(after - before[i]);
    }
    swarm.drones = next;
    Ok(rewards)
}

/// Observation encoding: greedy drones see the temporal relevance map and
/// their own coverage; cooperative drones additionally see everyone's.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObsMode {
    Greedy,
    Coop,
}

impl ObsMode {
    pub fn channels(self) -> usize {
        match self {
            ObsMode::Greedy => 2,
            ObsMode::Coop => 3,
        }
    }
}

/// A `channels x window x window` tensor in `[0, 1]`, stored channel-major.
/// Channel 0 is the ego-rotated temporal relevance crop, channel 1 the own
/// footprint raster, channel 2 (cooperative only) the swarm footprint union.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    size: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Observation {
    /// Wraps a raw channel-major tensor (used by tooling that synthesizes
    /// observations, e.g. timing benchmarks).
    pub fn from_data(size: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * size * size {
            return Err(Error::ShapeMismatch {
                expected_w: size,
                expected_h: channels,
                got_w: data.len(),
                got_h: 1,
            });
        }
        Ok(Self { size, channels, data })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.data[(channel * self.size + row) * self.size + col]
    }
}

/// Encodes what one drone sees: a square window centered on its ground
/// position, axes rotated with its heading so the surroundings are presented
/// in an ego-aligned frame, nearest-neighbor sampled at `window_scale` cells
/// per pixel and zero outside the map.
pub fn encode_observation(
    swarm: &SwarmState,
    drone_index: usize,
    map: &RelevanceMap,
    mode: ObsMode,
    config: &EnvConfig,
) -> Observation {
    assert!(drone_index < swarm.drones.len(), "drone index out of range");
    let grid = map.grid();
    let n = config.window_size;
    let channels = mode.channels();
    let mut data = vec![0f32; channels * n * n];

    let own = &swarm.drones[drone_index];
    let pose = decode_state(own, config);
    let center_col = pose.position.x / grid.cell_size;
    let center_row = pose.position.z / grid.cell_size;
    let heading = config.heading(own.ipsi);
    let (sin, cos) = heading.sin_cos();

    let (_, own_cells) = state_coverage(own, config, &grid);
    let mut own_flags = vec![false; grid.width * grid.height];
    for (row, col) in own_cells.iter() {
        own_flags[row * grid.width + col] = true;
    }
    let union_flags = if mode == ObsMode::Coop {
        let mut flags = vec![false; grid.width * grid.height];
        for drone in &swarm.drones {
            let (_, cells) = state_coverage(drone, config, &grid);
            for (row, col) in cells.iter() {
                flags[row * grid.width + col] = true;
            }
        }
        Some(flags)
    } else {
        None
    };

    let half = n as f64 / 2.0;
    for wr in 0..n {
        for wc in 0..n {
            let dr = wr as f64 + 0.5 - half;
            let dc = wc as f64 + 0.5 - half;
            // Window axes rotate with the heading; the content appears
            // counter-rotated, keeping the frame ego-aligned.
            let mr = dr * cos - dc * sin;
            let mc = dr * sin + dc * cos;
            let row = (center_row + mr * config.window_scale).floor();
            let col = (center_col + mc * config.window_scale).floor();
            if row < 0.0 || col < 0.0 || row >= grid.height as f64 || col >= grid.width as f64 {
                continue;
            }
            let (row, col) = (row as usize, col as usize);
            let idx = row * grid.width + col;
            data[wr * n + wc] = (map.value(row, col) * swarm.mask.value(row, col)) as f32;
            if own_flags[idx] {
                data[(n + wr) * n + wc] = 1.0;
            }
            if let Some(flags) = &union_flags {
                if flags[idx] {
                    data[(2 * n + wr) * n + wc] = 1.0;
                }
            }
        }
    }
    Observation { size: n, channels, data }
}
