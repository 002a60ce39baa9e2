use serde::Serialize;

use super::schedule::ExplorationSchedule;
use crate::dynamics::{integrate, IntegratorConfig, Termination, Trajectory};
use crate::error::{Error, Result};
use crate::game::{PolymatrixGame, StrategyProfile};
use crate::qre::exploitability;

/// Exploitability at or below which the annealed profile counts as selected.
pub const SELECTION_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Serialize)]
pub struct AnnealOutcome {
    #[serde(serialize_with = "crate::io::serialize_profile")]
    pub final_profile: StrategyProfile,
    pub exploitability: f64,
    pub selected: bool,
    /// Exploitability did not rise by more than 1e-6 over the last 10% of
    /// the horizon.
    pub tail_settled: bool,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

/// Integrates the dynamics while the schedule brings every exploration rate
/// to zero, and reports where the play ends.
///
/// The run covers the schedule's horizon exactly; early stopping is off.
pub fn anneal_select(
    game: &PolymatrixGame,
    schedule: &ExplorationSchedule,
    x0: &StrategyProfile,
    cfg: &IntegratorConfig,
) -> Result<AnnealOutcome> {
    let horizon = schedule.horizon();
    if !horizon.is_finite() {
        return Err(Error::Config("annealing needs a finite horizon".into()));
    }
    if schedule.value(horizon).iter().any(|&t| t != 0.0) {
        return Err(Error::Config("annealing schedule must end at zero for every player".into()));
    }
    for i in 0..=99 {
        let t = 0.99 * horizon * i as f64 / 99.0;
        if schedule.value(t).iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Config(format!(
                "annealing schedule must stay positive before the last 1% of the horizon (zero at t = {t})"
            )));
        }
    }
    let cfg = cfg.clone().with_horizon(horizon).with_stop_tolerance(None);
    let trajectory = integrate(game, x0, &cfg, Some(schedule))?;
    if let Termination::Diverged { step } = trajectory.termination {
        return Err(Error::Domain(format!(
            "annealing diverged at step {step} (t = {}); last valid time {}",
            step as f64 * cfg.step,
            trajectory.final_time()
        )));
    }
    let final_profile = trajectory.final_state().clone();
    let gap = exploitability(game, &final_profile)?;
    let tail: Vec<f64> = trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .filter(|(t, _)| **t >= 0.9 * horizon)
        .map(|(_, x)| exploitability(game, x))
        .collect::<Result<_>>()?;
    let tail_settled = tail.windows(2).all(|w| w[1] <= w[0] + 1e-6);
    Ok(AnnealOutcome { final_profile, exploitability: gap, selected: gap <= SELECTION_TOL, tail_settled, trajectory })
}
