//! Exhaustive COR search over the discretized state space.

use rayon::prelude::*;

use crate::env::{state_coverage, DroneState, EnvConfig};
use crate::relevance::{cor, RelevanceMap, TemporalMask};
use crate::{Error, Result};

/// Argmax of a brute-force sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceResult {
    pub state: DroneState,
    pub cor: f64,
    pub states_scanned: u64,
}

/// Default state budget: one halved-discretization sweep (16^6).
pub const DEFAULT_BUDGET: u64 = 16_777_216;

/// Evaluates the static COR (mask frozen at one) of every state and returns
/// the maximum, ties broken by the lowest lexicographic index tuple
/// `(ix, iy, iz, ipsi, iphi, ifocal)`. The scan partitions across threads;
/// the reduction is associative, so the result is partition-independent.
pub fn brute_force_search(
    map: &RelevanceMap,
    config: &EnvConfig,
    budget: u64,
) -> Result<BruteForceResult> {
    config.validate()?;
    let d = config.disc as u64;
    let states = d.pow(6);
    if states > budget {
        return Err(Error::BudgetExceeded { states, budget });
    }
    let mask = TemporalMask::ones_like(map);
    let grid = map.grid();

    let best = (0..config.disc as u16)
        .into_par_iter()
        .map(|ix| {
            let mut local: (f64, u64) = (f64::NEG_INFINITY, u64::MAX);
            let d16 = config.disc as u16;
            for iy in 0..d16 {
                for iz in 0..d16 {
                    for ipsi in 0..d16 {
                        for iphi in 0..d16 {
                            for ifocal in 0..d16 {
                                let state = DroneState::new(ix, iy, iz, ipsi, iphi, ifocal);
                                let value = evaluate(&state, map, &mask, config, &grid);
                                let index = linear_index(&state, d);
                                if value > local.0 || (value == local.0 && index < local.1) {
                                    local = (value, index);
                                }
                            }
                        }
                    }
                }
            }
            local
        })
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |a, b| {
                if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                    a
                } else {
                    b
                }
            },
        );

    Ok(BruteForceResult {
        state: state_from_index(best.1, d),
        cor: best.0,
        states_scanned: states,
    })
}

fn evaluate(
    state: &DroneState,
    map: &RelevanceMap,
    mask: &TemporalMask,
    config: &EnvConfig,
    grid: &crate::geometry::GridSpec,
) -> f64 {
    let (fp, cells) = state_coverage(state, config, grid);
    cor(map, mask, &fp, &cells, &config.penalty).expect("shapes agree by construction")
}

fn linear_index(s: &DroneState, d: u64) -> u64 {
    ((((s.ix as u64 * d + s.iy as u64) * d + s.iz as u64) * d + s.ipsi as u64) * d
        + s.iphi as u64)
        * d
        + s.ifocal as u64
}

fn state_from_index(mut index: u64, d: u64) -> DroneState {
    let ifocal = (index % d) as u16;
    index /= d;
    let iphi = (index % d) as u16;
    index /= d;
    let ipsi = (index % d) as u16;
    index /= d;
    let iz = (index % d) as u16;
    index /= d;
    let iy = (index % d) as u16;
    index /= d;
    DroneState::new(index as u16, iy, iz, ipsi, iphi, ifocal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relevance::{generate_random_map, MapGenConfig, PenaltyParams};
    use std::f64::consts::TAU;

    fn config_with_disc(disc: usize) -> EnvConfig {
        let world_side = 1024.0;
        EnvConfig {
            world_side,
            disc,
            rotate_step: TAU / disc as f64,
            penalty: PenaltyParams::default_for_area(world_side * world_side),
            ..EnvConfig::default()
        }
    }

    /// Sequential linear-scan oracle in index order, first maximum wins.
    fn sequential_scan(map: &RelevanceMap, config: &EnvConfig) -> (DroneState, f64) {
        let mask = TemporalMask::ones_like(map);
        let grid = map.grid();
        let d = config.disc as u16;
        let mut best_state = DroneState::new(0, 0, 0, 0, 0, 0);
        let mut best = f64::NEG_INFINITY;
        for ix in 0..d {
            for iy in 0..d {
                for iz in 0..d {
                    for ipsi in 0..d {
                        for iphi in 0..d {
                            for ifocal in 0..d {
                                let state = DroneState::new(ix, iy, iz, ipsi, iphi, ifocal);
                                let v = evaluate(&state, map, &mask, config, &grid);
                                if v > best {
                                    best = v;
                                    best_state = state;
                                }
                            }
                        }
                    }
                }
            }
        }
        (best_state, best)
    }

    #[test]
    fn parallel_matches_sequential_scan_on_small_instances() {
        let config = config_with_disc(4);
        for seed in [3u64, 19, 101] {
            let map =
                generate_random_map(seed, &MapGenConfig::default(), &config.grid()).unwrap();
            let got = brute_force_search(&map, &config, DEFAULT_BUDGET).unwrap();
            let (state, value) = sequential_scan(&map, &config);
            assert_eq!(got.state, state, "seed {seed}");
            assert_eq!(got.cor, value, "seed {seed}");
            assert_eq!(got.states_scanned, 4096);

            // Repeat run: identical output.
            let again = brute_force_search(&map, &config, DEFAULT_BUDGET).unwrap();
            assert_eq!(got, again);
        }
    }

    #[test]
    fn uniform_map_optimum_sits_on_penalty_plateau() {
        let config = config_with_disc(6);
        let grid = config.grid();
        let map = RelevanceMap::new(
            grid.width,
            grid.height,
            grid.cell_size,
            vec![1.0; grid.width * grid.height],
        )
        .unwrap();
        let got = brute_force_search(&map, &config, DEFAULT_BUDGET).unwrap();
        let (fp, _) = state_coverage(&got.state, &config, &grid);
        assert!(fp.valid);
        let k = config.penalty.evaluate(fp.area);
        assert_eq!(k, 1.0, "optimal area {} should sit on the plateau", fp.area);
    }

    #[test]
    fn budget_is_enforced() {
        let config = config_with_disc(16);
        let map =
            generate_random_map(1, &MapGenConfig::default(), &config.grid()).unwrap();
        assert!(matches!(
            brute_force_search(&map, &config, 1000),
            Err(Error::BudgetExceeded { states: 16_777_216, budget: 1000 })
        ));
    }
}
