//! Command-line front end for training, evaluation and the experiment suite.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use patrol_core::config::SimConfig;
use patrol_core::env::ObsMode;
use patrol_core::harness;
use patrol_core::learner::{self, LogEntry};
use patrol_core::relevance::{self, RelevanceMap};

#[derive(Parser)]
#[command(name = "patrol", about = "Drone-swarm patrolling simulator and DQN trainer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy network.
    Train {
        #[arg(long, value_parser = parse_mode)]
        mode: ObsMode,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output weights file.
        #[arg(long)]
        out: PathBuf,
        /// Override the configured epoch count.
        #[arg(long)]
        epochs: Option<usize>,
        /// Training log CSV (default: <out>.log.csv).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Roll out a trained policy and record per-step coverage.
    Eval {
        #[arg(long)]
        weights: PathBuf,
        /// Map file, or `random:<seed>` for a generated map.
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 1)]
        drones: usize,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exhaustive COR search over the discretized state space.
    Bruteforce {
        #[arg(long)]
        map: PathBuf,
        /// Discretization steps per state parameter.
        #[arg(long)]
        disc: usize,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = harness::DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Compare the learned patroller against the zigzag baseline.
    CompareZigzag {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 50)]
        maps: usize,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare cooperative and greedy swarms over several swarm sizes.
    SwarmCompare {
        /// Greedy (2-channel) weights.
        #[arg(long)]
        greedy: PathBuf,
        /// Cooperative (3-channel) weights.
        #[arg(long)]
        coop: PathBuf,
        /// Comma-separated swarm sizes, e.g. 2,3,4,5.
        #[arg(long, default_value = "2,3,4,5", value_parser = parse_counts)]
        drones: Vec<usize>,
        /// Maps per swarm size.
        #[arg(long, default_value_t = 20)]
        maps: usize,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Measure single-threaded forward-pass latency.
    Timing {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Generate a random relevance map file.
    Genmap {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write a CSV twin next to the binary map.
        #[arg(long, default_value_t = false)]
        csv: bool,
    },
}

fn parse_mode(s: &str) -> std::result::Result<ObsMode, String> {
    match s {
        "greedy" => Ok(ObsMode::Greedy),
        "coop" => Ok(ObsMode::Coop),
        _ => Err("expected greedy|coop".into()),
    }
}

fn parse_counts(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',')
        .map(|tok| tok.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect()
}

fn load_config(path: &Option<PathBuf>) -> Result<SimConfig> {
    match path {
        Some(p) => SimConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(SimConfig::default()),
    }
}

/// `PATROL_SEED` overrides any `--seed` argument.
fn resolve_seed(cli_seed: u64) -> Result<u64> {
    match std::env::var("PATROL_SEED") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .with_context(|| format!("PATROL_SEED must be an unsigned integer, got {text:?}")),
        Err(_) => Ok(cli_seed),
    }
}

fn load_map_arg(spec: &str, cfg: &SimConfig) -> Result<RelevanceMap> {
    if let Some(seed) = spec.strip_prefix("random:") {
        let seed: u64 = seed.parse().context("random:<seed> needs an unsigned integer")?;
        return Ok(relevance::generate_random_map(seed, &cfg.mapgen, &cfg.env.grid())?);
    }
    load_map_file(Path::new(spec), cfg)
}

fn load_map_file(path: &Path, cfg: &SimConfig) -> Result<RelevanceMap> {
    let map = if path.extension().is_some_and(|e| e == "csv") {
        relevance::load_map_csv(path, cfg.env.grid().cell_size)?
    } else {
        relevance::load_map(path)?
    };
    Ok(map)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train { mode, config, seed, out, epochs, log } => {
            let cfg = load_config(&config)?;
            let seed = resolve_seed(seed)?;
            let mut train_cfg = cfg.train_for(mode);
            if let Some(epochs) = epochs {
                train_cfg.epochs = epochs;
            }
            let total = train_cfg.epochs;
            let mut report = |entry: &LogEntry| {
                if entry.epoch % 100 == 0 || entry.epoch + 1 == total {
                    eprintln!(
                        "epoch {:>7}/{} eps {:.3} loss {:.5} mean_reward {:+.5}",
                        entry.epoch + 1,
                        total,
                        entry.epsilon,
                        entry.loss,
                        entry.mean_reward
                    );
                }
            };
            let (net, log_data) = learner::train_run(
                mode,
                &train_cfg,
                &cfg.env,
                &cfg.mapgen,
                seed,
                Some(&mut report),
            )?;
            learner::save_weights(&net, &out)?;
            let log_path = log.unwrap_or_else(|| {
                let mut p = out.as_os_str().to_owned();
                p.push(".log.csv");
                PathBuf::from(p)
            });
            log_data.write_csv(&log_path)?;
            println!("saved weights to {} and log to {}", out.display(), log_path.display());
        }
        Command::Eval { weights, map, drones, steps, csv, config, seed } => {
            let cfg = load_config(&config)?;
            let seed = resolve_seed(seed)?;
            let net = learner::load_weights(&weights)?;
            let map = load_map_arg(&map, &cfg)?;
            let records = harness::run_policy_eval(&net, &map, drones, steps, &cfg.env, seed)?;
            harness::write_eval_csv(&records, &csv)?;
            let mean_g: f64 =
                records.iter().map(|r| r.g).sum::<f64>() / records.len().max(1) as f64;
            println!("{} steps, mean G {:.4}", records.len(), mean_g);
        }
        Command::Bruteforce { map, disc, csv, config, budget } => {
            let mut cfg = load_config(&config)?;
            let map = load_map_file(&map, &cfg)?;
            cfg.env.disc = disc;
            cfg.env.rotate_step = std::f64::consts::TAU / disc as f64;
            let result = harness::brute_force_search(&map, &cfg.env, budget)?;
            let s = result.state;
            std::fs::write(
                &csv,
                format!(
                    "ix,iy,iz,ipsi,iphi,ifocal,cor\n{},{},{},{},{},{},{:.6}\n",
                    s.ix, s.iy, s.iz, s.ipsi, s.iphi, s.ifocal, result.cor
                ),
            )?;
            println!(
                "best COR {:.6} at state ({}, {}, {}, {}, {}, {}) over {} states",
                result.cor, s.ix, s.iy, s.iz, s.ipsi, s.iphi, s.ifocal, result.states_scanned
            );
        }
        Command::CompareZigzag { weights, maps, steps, csv, config, seed } => {
            let cfg = load_config(&config)?;
            let seed = resolve_seed(seed)?;
            let net = learner::load_weights(&weights)?;
            let report =
                harness::patrol_comparison(&net, maps, steps, &cfg.env, &cfg.mapgen, seed)?;
            report.write_csv(&csv)?;
            println!(
                "ours {:.4} vs zigzag {:.4}, mean boost {:+.2}% ({}/{} wins)",
                report.mean_ours,
                report.mean_zigzag,
                report.mean_boost_pct,
                report.wins,
                report.records.len()
            );
        }
        Command::SwarmCompare { greedy, coop, drones, maps, steps, csv, config, seed } => {
            let cfg = load_config(&config)?;
            let seed = resolve_seed(seed)?;
            let greedy_net = learner::load_weights(&greedy)?;
            let coop_net = learner::load_weights(&coop)?;
            let report = harness::swarm_comparison(
                &greedy_net,
                &coop_net,
                &drones,
                maps,
                steps,
                &cfg.env,
                &cfg.mapgen,
                seed,
            )?;
            report.write_csv(&csv)?;
            for (n, coop_g, greedy_g, boost) in &report.per_count {
                println!(
                    "{n} drones: coop {coop_g:.4} vs greedy {greedy_g:.4}, boost {boost:+.2}%"
                );
            }
        }
        Command::Timing { weights, trials } => {
            let net = learner::load_weights(&weights)?;
            let report = harness::inference_timing(&net, trials, 0)?;
            println!(
                "forward pass: mean {:.3} ms, std {:.3} ms over {} trials",
                report.mean_ms, report.std_ms, report.trials
            );
        }
        Command::Genmap { seed, out, config, csv } => {
            let cfg = load_config(&config)?;
            let seed = resolve_seed(seed)?;
            let map = relevance::generate_random_map(seed, &cfg.mapgen, &cfg.env.grid())?;
            relevance::save_map(&map, &out)?;
            if csv {
                let mut p = out.as_os_str().to_owned();
                p.push(".csv");
                relevance::save_map_csv(&map, &PathBuf::from(p))?;
            }
            println!("wrote {}x{} map to {}", map.width(), map.height(), out.display());
        }
    }
    Ok(())
}
