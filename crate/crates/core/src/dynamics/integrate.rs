use serde::Serialize;

use super::{field_into, DEFAULT_INTERIOR_FLOOR};
use crate::error::{Error, Result};
use crate::experiments::schedule::ExplorationSchedule;
use crate::game::{PolymatrixGame, StrategyProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    Rk4,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Self::Euler),
            "rk4" => Ok(Self::Rk4),
            other => Err(Error::Config(format!("unknown method {other:?} (expected euler or rk4)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub step: f64,
    pub max_steps: usize,
    /// Entries that were positive at the start are kept at or above this.
    pub interior_floor: f64,
    /// Record every `record_every` steps; the final state is always recorded.
    pub record_every: usize,
    /// Stop once the field sup-norm falls below this.
    pub stop_tolerance: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::euler()
    }
}

impl IntegratorConfig {
    pub fn euler() -> Self {
        Self {
            method: Method::Euler,
            step: 3e-4,
            max_steps: 100_000,
            interior_floor: DEFAULT_INTERIOR_FLOOR,
            record_every: 100,
            stop_tolerance: Some(1e-10),
        }
    }

    pub fn rk4() -> Self {
        Self { method: Method::Rk4, step: 1e-2, ..Self::euler() }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    /// Sets `max_steps` so the run covers time `horizon`.
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.max_steps = (horizon / self.step).round().max(1.0) as usize;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.interior_floor = floor;
        self
    }

    pub fn with_stop_tolerance(mut self, tol: Option<f64>) -> Self {
        self.stop_tolerance = tol;
        self
    }

    fn validate(&self, game: &PolymatrixGame) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!("step must be positive, got {}", self.step)));
        }
        if self.max_steps == 0 || self.record_every == 0 {
            return Err(Error::Config("max_steps and record_every must be positive".into()));
        }
        let widest = game.action_counts().into_iter().max().unwrap_or(1) as f64;
        if !(self.interior_floor > 0.0 && self.interior_floor < 1.0 / widest) {
            return Err(Error::Config(format!(
                "interior floor must lie in (0, 1/{widest}), got {}",
                self.interior_floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Termination {
    /// Ran for `max_steps`.
    Completed,
    /// Field sup-norm dropped below the stop tolerance.
    Converged,
    /// A non-finite value appeared; the last valid state is kept.
    Diverged { step: usize },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StrategyProfile>,
    pub termination: Termination,
    pub steps_taken: usize,
    /// Number of steps at which a logarithm or a coordinate was clamped.
    pub clamp_events: usize,
    /// Named per-stamp channels, each as long as `times`.
    pub diagnostics: Vec<(String, Vec<f64>)>,
}

impl Trajectory {
    pub fn final_state(&self) -> &StrategyProfile {
        self.states.last().expect("trajectory holds at least the start")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds at least the start")
    }

    pub fn clamped(&self) -> bool {
        self.clamp_events > 0
    }

    /// Adds a channel computed from every recorded state.
    pub fn add_diagnostic(
        &mut self,
        name: impl Into<String>,
        f: impl Fn(&StrategyProfile) -> f64,
    ) {
        let values = self.states.iter().map(f).collect();
        self.diagnostics.push((name.into(), values));
    }

    pub fn diagnostic(&self, name: &str) -> Option<&[f64]> {
        self.diagnostics.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Time average of the recorded states.
    pub fn time_average(&self) -> StrategyProfile {
        let first = &self.states[0];
        let n = first.as_slice().len();
        let mut acc = vec![0.0; n];
        if self.states.len() == 1 {
            return first.clone();
        }
        let mut total = 0.0;
        for w in 0..self.states.len() - 1 {
            let dt = self.times[w + 1] - self.times[w];
            total += dt;
            for (a, (p, q)) in acc
                .iter_mut()
                .zip(self.states[w].as_slice().iter().zip(self.states[w + 1].as_slice()))
            {
                *a += 0.5 * dt * (p + q);
            }
        }
        acc.iter_mut().for_each(|v| *v /= total);
        let mut avg = first.with_data(acc);
        avg.renormalize();
        avg
    }
}

struct Workspace {
    k: [Vec<f64>; 4],
    stage: Vec<f64>,
    scratch: Vec<f64>,
    temps: Vec<f64>,
}

impl Workspace {
    fn new(n: usize, players: usize) -> Self {
        Self {
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            stage: vec![0.0; n],
            scratch: Vec::new(),
            temps: vec![0.0; players],
        }
    }
}

/// Integrates the Q-learning dynamics from `x0`.
///
/// With a schedule, exploration rates follow it in time (RK4 stages use the
/// rates at their own stage times); otherwise the game's rates are used.
/// After each step, entries that were positive in `x0` are clamped to
/// `[floor, 1]` and every simplex is renormalized. Entries that were exactly
/// zero stay zero.
pub fn integrate(
    game: &PolymatrixGame,
    x0: &StrategyProfile,
    cfg: &IntegratorConfig,
    schedule: Option<&ExplorationSchedule>,
) -> Result<Trajectory> {
    game.check_profile(x0)?;
    x0.validate()?;
    cfg.validate(game)?;
    if let Some(s) = schedule {
        if s.num_players() != game.num_players() {
            return Err(Error::Shape(format!(
                "schedule has {} players, game has {}",
                s.num_players(),
                game.num_players()
            )));
        }
    }
    let base_temps = game.temperatures();
    let support: Vec<bool> = x0.as_slice().iter().map(|&v| v > 0.0).collect();
    let n = x0.as_slice().len();
    let mut ws = Workspace::new(n, game.num_players());
    let temps_at = |t: f64, out: &mut Vec<f64>| match schedule {
        Some(s) => s.temperatures_into(t, out),
        None => out.copy_from_slice(&base_temps),
    };

    let mut x = x0.clone();
    let mut times = vec![0.0];
    let mut states = vec![x0.clone()];
    let mut termination = Termination::Completed;
    let mut clamp_events = 0;
    let mut steps_taken = 0;
    let dt = cfg.step;

    for step in 0..cfg.max_steps {
        let t = step as f64 * dt;
        temps_at(t, &mut ws.temps);
        let mut clamped = field_into(game, &ws.temps, &x, cfg.interior_floor, &mut ws.k[0], &mut ws.scratch);
        if let Some(tol) = cfg.stop_tolerance {
            let norm = ws.k[0].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if norm < tol {
                termination = Termination::Converged;
                break;
            }
        }
        let mut next = x.as_slice().to_vec();
        match cfg.method {
            Method::Euler => {
                for (v, d) in next.iter_mut().zip(&ws.k[0]) {
                    *v += dt * d;
                }
            }
            Method::Rk4 => {
                for (stage, c) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
                    for i in 0..n {
                        ws.stage[i] = x.as_slice()[i] + c * dt * ws.k[stage - 1][i];
                    }
                    let xs = x.with_data(ws.stage.clone());
                    temps_at(t + c * dt, &mut ws.temps);
                    let (_, rest) = ws.k.split_at_mut(stage);
                    clamped |= field_into(game, &ws.temps, &xs, cfg.interior_floor, &mut rest[0], &mut ws.scratch);
                }
                for i in 0..n {
                    next[i] += dt / 6.0 * (ws.k[0][i] + 2.0 * ws.k[1][i] + 2.0 * ws.k[2][i] + ws.k[3][i]);
                }
            }
        }
        if next.iter().any(|v| !v.is_finite()) {
            log::warn!("non-finite state at step {step}; stopping");
            termination = Termination::Diverged { step };
            break;
        }
        for (v, &keep) in next.iter_mut().zip(&support) {
            if !keep {
                *v = 0.0;
            } else if *v < cfg.interior_floor || *v > 1.0 {
                clamped = true;
                *v = v.clamp(cfg.interior_floor, 1.0);
            }
        }
        x = x.with_data(next);
        x.renormalize();
        if clamped {
            clamp_events += 1;
        }
        steps_taken = step + 1;
        if steps_taken % cfg.record_every == 0 {
            times.push(steps_taken as f64 * dt);
            states.push(x.clone());
        }
    }
    let t_final = steps_taken as f64 * dt;
    if *times.last().unwrap() < t_final {
        times.push(t_final);
        states.push(x);
    }
    Ok(Trajectory { times, states, termination, steps_taken, clamp_events, diagnostics: Vec::new() })
}

/// One unclamped RK4 step of size `h` (which may be negative) with fixed
/// exploration rates.
pub(crate) fn rk4_step(
    game: &PolymatrixGame,
    temperatures: &[f64],
    x: &StrategyProfile,
    h: f64,
    floor: f64,
) -> StrategyProfile {
    let n = x.as_slice().len();
    let mut scratch = Vec::new();
    let mut k: [Vec<f64>; 4] = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    field_into(game, temperatures, x, floor, &mut k[0], &mut scratch);
    for (stage, c) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
        let data = (0..n).map(|i| x.as_slice()[i] + c * h * k[stage - 1][i]).collect();
        let xs = x.with_data(data);
        let (_, rest) = k.split_at_mut(stage);
        field_into(game, temperatures, &xs, floor, &mut rest[0], &mut scratch);
    }
    let data = (0..n)
        .map(|i| x.as_slice()[i] + h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]))
        .collect();
    x.with_data(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::generators::make_rps;

    #[test]
    fn vertex_start_is_constant() {
        let g = make_rps();
        let x0 = StrategyProfile::pure(&[3, 3], &[0, 1]).unwrap();
        let traj = integrate(&g, &x0, &IntegratorConfig::euler().with_max_steps(1000), None).unwrap();
        for s in &traj.states {
            assert_eq!(s, &x0);
        }
        assert_eq!(traj.termination, Termination::Converged);
    }

    #[test]
    fn uniform_rps_stays_put() {
        let g = make_rps().with_temperatures(&[0.3, 0.3]).unwrap();
        let x0 = g.uniform_profile();
        let cfg = IntegratorConfig::rk4().with_max_steps(100).with_stop_tolerance(None);
        let traj = integrate(&g, &x0, &cfg, None).unwrap();
        assert!(traj.final_state().sup_distance(&x0) < 1e-15);
        assert_eq!(traj.steps_taken, 100);
    }

    #[test]
    fn records_final_state() {
        let g = make_rps();
        let x0 = StrategyProfile::new(vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5]]).unwrap();
        let cfg = IntegratorConfig::euler().with_max_steps(250).with_record_every(100);
        let traj = integrate(&g, &x0, &cfg, None).unwrap();
        assert_eq!(traj.times.len(), 4);
        assert!((traj.final_time() - 250.0 * 3e-4).abs() < 1e-15);
        for s in &traj.states {
            s.validate().unwrap();
        }
    }

    #[test]
    fn bad_configs_are_refused() {
        let g = make_rps();
        let x0 = g.uniform_profile();
        assert!(integrate(&g, &x0, &IntegratorConfig::euler().with_step(0.0), None).is_err());
        assert!(integrate(&g, &x0, &IntegratorConfig::euler().with_floor(0.5), None).is_err());
        assert!(integrate(&g, &x0, &IntegratorConfig::euler().with_record_every(0), None).is_err());
    }

    #[test]
    fn method_parsing() {
        assert_eq!("RK4".parse::<Method>().unwrap(), Method::Rk4);
        assert!("leapfrog".parse::<Method>().is_err());
    }
}
