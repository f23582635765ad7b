//! The naive boustrophedon patrolling baseline.
//!
//! A closed waypoint cycle at fixed altitude, nadiral tilt, fixed zoom and
//! fixed heading: vertical lanes (sweeping the `y` index) spaced by the
//! footprint width, then horizontal lanes spaced by the footprint depth,
//! then a walk back to the start. Consecutive waypoints differ by exactly
//! one move action, so a controller can replay the cycle indefinitely,
//! ignoring the relevance map entirely.

use crate::env::{decode_state, Action, DroneState, EnvConfig};
use crate::geometry::footprint;
use crate::{Error, Result};

/// A closed patrol cycle (`waypoints.last() == waypoints.first()`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZigzagPlan {
    waypoints: Vec<DroneState>,
}

impl ZigzagPlan {
    /// Builds the default plan: altitude and zoom are chosen so the nadiral
    /// footprint area sits closest to the penalty plateau midpoint, and lane
    /// spacing equals the footprint extent so adjacent lanes abut.
    pub fn generate(config: &EnvConfig) -> Result<ZigzagPlan> {
        config.validate()?;
        let d = config.disc as u16;
        let target = (config.penalty.a1 + config.penalty.a2) / 2.0;
        let mut best: Option<(f64, u16, u16)> = None;
        for iz in 0..d {
            for ifocal in 0..d {
                let probe = DroneState::new(0, 0, iz, 0, d - 1, ifocal);
                let pose = decode_state(&probe, config);
                let fp = footprint(&pose, &config.intrinsics);
                if !fp.valid {
                    continue;
                }
                let score = (fp.area - target).abs();
                if best.map_or(true, |(s, _, _)| score < s) {
                    best = Some((score, iz, ifocal));
                }
            }
        }
        let (_, iz, ifocal) =
            best.ok_or_else(|| Error::Config("no valid nadiral footprint exists".into()))?;

        // Lane spacing from the actual footprint extents at the chosen state.
        let probe = DroneState::new(0, 0, iz, 0, d - 1, ifocal);
        let pose = decode_state(&probe, config);
        let fp = footprint(&pose, &config.intrinsics);
        let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min_z, mut max_z) = (f64::INFINITY, f64::NEG_INFINITY);
        for c in &fp.corners {
            min_x = min_x.min(c.x);
            max_x = max_x.max(c.x);
            min_z = min_z.min(c.z);
            max_z = max_z.max(c.z);
        }
        let step = config.world_side / config.disc as f64;
        let spacing_x = (((max_x - min_x) / step).floor() as u16).max(1);
        let spacing_y = (((max_z - min_z) / step).floor() as u16).max(1);
        Self::with_params(config, iz, ifocal, spacing_x, spacing_y)
    }

    /// Builds a plan with explicit altitude, zoom and lane spacings.
    pub fn with_params(
        config: &EnvConfig,
        iz: u16,
        ifocal: u16,
        spacing_x: u16,
        spacing_y: u16,
    ) -> Result<ZigzagPlan> {
        let d = config.disc as u16;
        if iz >= d || ifocal >= d {
            return Err(Error::Config("zigzag altitude/zoom index out of range".into()));
        }
        if spacing_x == 0 || spacing_y == 0 {
            return Err(Error::Config("lane spacing must be positive".into()));
        }
        let state = |ix: u16, iy: u16| DroneState::new(ix, iy, iz, 0, d - 1, ifocal);

        let mut waypoints = vec![state(0, 0)];
        let push_walk = |waypoints: &mut Vec<DroneState>, ix: u16, iy: u16| {
            let last = *waypoints.last().expect("plan starts non-empty");
            let (mut cx, mut cy) = (last.ix, last.iy);
            while cx != ix {
                cx = if ix > cx { cx + 1 } else { cx - 1 };
                waypoints.push(state(cx, cy));
            }
            while cy != iy {
                cy = if iy > cy { cy + 1 } else { cy - 1 };
                waypoints.push(state(cx, cy));
            }
        };

        let lanes = |spacing: u16| -> Vec<u16> {
            let mut lanes: Vec<u16> = (0..d).step_by(spacing as usize).collect();
            if *lanes.last().expect("at least one lane") != d - 1 {
                lanes.push(d - 1);
            }
            lanes
        };

        // Vertical scans: sweep the full y range at each x lane.
        for (i, &lx) in lanes(spacing_x).iter().enumerate() {
            let (from, to) = if i % 2 == 0 { (0, d - 1) } else { (d - 1, 0) };
            push_walk(&mut waypoints, lx, from);
            push_walk(&mut waypoints, lx, to);
        }

        // Horizontal scans: start from the lane the vertical phase ended on.
        let mut y_lanes = lanes(spacing_y);
        if waypoints.last().expect("non-empty").iy == d - 1 {
            y_lanes.reverse();
        }
        let mut x_edge = waypoints.last().expect("non-empty").ix;
        for &ly in &y_lanes {
            push_walk(&mut waypoints, x_edge, ly);
            x_edge = if x_edge == 0 { d - 1 } else { 0 };
            push_walk(&mut waypoints, x_edge, ly);
        }

        // Close the cycle.
        push_walk(&mut waypoints, 0, 0);
        Ok(ZigzagPlan { waypoints })
    }

    pub fn waypoints(&self) -> &[DroneState] {
        &self.waypoints
    }

    pub fn start(&self) -> DroneState {
        self.waypoints[0]
    }

    /// Number of actions in one full cycle.
    pub fn cycle_len(&self) -> usize {
        self.waypoints.len() - 1
    }

    /// The action moving from waypoint `step` to the next (cyclic).
    pub fn action_at(&self, step: usize) -> Action {
        let i = step % self.cycle_len();
        let from = self.waypoints[i];
        let to = self.waypoints[i + 1];
        let dx = to.ix as i32 - from.ix as i32;
        let dy = to.iy as i32 - from.iy as i32;
        // Heading is pinned to index 0 (along +x): forward/backward move x,
        // right/left move +/-y.
        match (dx, dy) {
            (1, 0) => Action::MoveForward,
            (-1, 0) => Action::MoveBackward,
            (0, 1) => Action::MoveRight,
            (0, -1) => Action::MoveLeft,
            other => unreachable!("non-unit waypoint difference {other:?}"),
        }
    }
}
