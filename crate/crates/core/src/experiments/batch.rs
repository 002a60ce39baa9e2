use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::schedule::ExplorationSchedule;
use crate::dynamics::{integrate, IntegratorConfig, Termination};
use crate::error::{Error, Result};
use crate::game::{PolymatrixGame, StrategyProfile};

/// Seed of run `index` in a batch seeded with `seed` (SplitMix64 finalizer).
pub fn run_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub runs: usize,
    pub seed: u64,
    pub integrator: IntegratorConfig,
    pub schedule: Option<ExplorationSchedule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlayerSummary {
    pub id: String,
    pub actions: Vec<String>,
    pub probabilities: Vec<Stats>,
    pub utility: Stats,
}

impl PlayerSummary {
    /// Largest standard deviation over this player's actions.
    pub fn max_std(&self) -> f64 {
        self.probabilities.iter().map(|s| s.std).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchSummary {
    pub runs: usize,
    pub seed: u64,
    pub players: Vec<PlayerSummary>,
    /// Per run: the integrator stopped on a vanishing field.
    pub converged: Vec<bool>,
    #[serde(skip)]
    pub finals: Vec<StrategyProfile>,
}

/// Runs the dynamics from `runs` independent Dirichlet(1) starts and
/// summarizes the final states. Runs execute in parallel; results are
/// reduced in run order, so equal seeds give identical summaries.
pub fn batch_run(game: &PolymatrixGame, cfg: &BatchConfig) -> Result<BatchSummary> {
    if cfg.runs < 2 {
        return Err(Error::Config(format!("a batch needs at least 2 runs, got {}", cfg.runs)));
    }
    let counts = game.action_counts();
    let results: Vec<(StrategyProfile, bool)> = (0..cfg.runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(run_seed(cfg.seed, i));
            let x0 = StrategyProfile::random_dirichlet(&counts, &mut rng);
            let traj = integrate(game, &x0, &cfg.integrator, cfg.schedule.as_ref())?;
            if let Termination::Diverged { step } = traj.termination {
                log::warn!("run {i} diverged at step {step}");
            }
            Ok((traj.final_state().clone(), traj.termination == Termination::Converged))
        })
        .collect::<Result<_>>()?;
    let (finals, converged): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let utilities: Vec<Vec<f64>> = finals.iter().map(|x| game.utilities(x)).collect::<Result<_>>()?;
    let players = game
        .players()
        .iter()
        .enumerate()
        .map(|(k, p)| PlayerSummary {
            id: p.id.clone(),
            actions: p.actions.clone(),
            probabilities: (0..p.num_actions())
                .map(|i| Stats::of(&finals.iter().map(|x| x.player(k)[i]).collect::<Vec<_>>()))
                .collect(),
            utility: Stats::of(&utilities.iter().map(|u| u[k]).collect::<Vec<_>>()),
        })
        .collect();
    Ok(BatchSummary { runs: cfg.runs, seed: cfg.seed, players, converged, finals })
}
