use num_traits::Num;

use super::{integrate::Termination, integrate::Trajectory, softmax_scaled};
use crate::error::{Error, Result};
use crate::game::{PolymatrixGame, StrategyProfile};

/// Expected-reward Q-learning step `Q_i ← Q_i + α (r_i − Q_i)` for every action.
pub fn q_update<F: Num + Clone>(q: &mut [F], alpha: F, rewards: &[F]) {
    for (qi, ri) in q.iter_mut().zip(rewards) {
        let step = alpha.clone() * (ri.clone() - qi.clone());
        *qi = qi.clone() + step;
    }
}

/// Experience-weighted attraction parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwaParams<F> {
    /// Experience retention ρ.
    pub rho: F,
    /// Weight δ on foregone payoffs.
    pub delta: F,
    /// Attraction decay α.
    pub alpha: F,
}

/// One EWA step:
///
/// ```text
/// N' = ρ N + 1
/// A_i ← [ (1 − α) N A_i + (δ + (1 − δ) 1{i = chosen}) r_i ] / N'
/// ```
///
/// With `ρ = 0`, `δ = 1`, `N = 1` and rewards pre-scaled by α this equals
/// [`q_update`] in exact arithmetic.
pub fn ewa_update<F: Num + Clone + PartialOrd>(
    attractions: &mut [F],
    experience: &mut F,
    params: EwaParams<F>,
    chosen: usize,
    rewards: &[F],
) -> Result<()> {
    let (zero, one) = (F::zero(), F::one());
    let unit = |v: &F| *v >= zero && *v <= one;
    if !unit(&params.rho) || !unit(&params.delta) || !unit(&params.alpha) {
        return Err(Error::Domain("EWA parameters must lie in [0, 1]".into()));
    }
    if *experience < zero {
        return Err(Error::Domain("EWA experience must be nonnegative".into()));
    }
    if chosen >= attractions.len() || rewards.len() != attractions.len() {
        return Err(Error::Shape("EWA chosen action or reward length out of range".into()));
    }
    let n = experience.clone();
    let n_next = params.rho * n.clone() + one.clone();
    let decay = (one.clone() - params.alpha) * n;
    for (i, (a, r)) in attractions.iter_mut().zip(rewards).enumerate() {
        let weight = if i == chosen {
            one.clone()
        } else {
            params.delta.clone()
        };
        *a = (decay.clone() * a.clone() + weight * r.clone()) / n_next.clone();
    }
    *experience = n_next;
    Ok(())
}

/// Q-values and learning rates of every player.
#[derive(Debug, Clone, PartialEq)]
pub struct QValueState {
    pub values: Vec<Vec<f64>>,
    pub learning_rates: Vec<f64>,
}

impl QValueState {
    pub fn new(values: Vec<Vec<f64>>, learning_rates: Vec<f64>) -> Result<Self> {
        if values.len() != learning_rates.len() {
            return Err(Error::Shape("one learning rate per player is required".into()));
        }
        if let Some(a) = learning_rates.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return Err(Error::Domain(format!("learning rate must lie in (0, 1], got {a}")));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("Q-values must be finite".into()));
        }
        Ok(Self { values, learning_rates })
    }

    /// All-zero Q-values with a common learning rate.
    pub fn zeros(game: &PolymatrixGame, alpha: f64) -> Result<Self> {
        let values = game.action_counts().into_iter().map(|m| vec![0.0; m]).collect();
        Self::new(values, vec![alpha; game.num_players()])
    }

    /// Q-values whose Boltzmann policy at the game's rates is `x`.
    pub fn from_profile(game: &PolymatrixGame, x: &StrategyProfile, alpha: f64) -> Result<Self> {
        game.check_profile(x)?;
        x.require_interior()?;
        let temps = game.temperatures();
        let values = x
            .players()
            .zip(&temps)
            .map(|(s, &t)| s.iter().map(|p| t * p.ln()).collect())
            .collect();
        Self::new(values, vec![alpha; game.num_players()])
    }

    /// Applies [`q_update`] to player `k` only.
    pub fn update(&mut self, k: usize, rewards: &[f64]) -> Result<()> {
        let q = self
            .values
            .get_mut(k)
            .ok_or_else(|| Error::Shape(format!("no player {k}")))?;
        if q.len() != rewards.len() || rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::Shape(format!("player {k} needs {} finite rewards", q.len())));
        }
        q_update(q, self.learning_rates[k], rewards);
        Ok(())
    }

    pub fn policy(&self, temperatures: &[f64]) -> StrategyProfile {
        StrategyProfile::from_parts(
            self.values
                .iter()
                .zip(temperatures)
                .map(|(q, &t)| softmax_scaled(q, t))
                .collect(),
        )
    }
}

/// Simultaneous expected-reward Q-learning with Boltzmann policies.
///
/// Each round every player `k` plays `x_k = softmax(Q_k / T_k)` and updates
/// `Q_k ← Q_k + α_k (r_k(x_-k) − Q_k)`. Time is the round count; the policy
/// after every `record_every` rounds is recorded.
pub fn discrete_play(
    game: &PolymatrixGame,
    q0: &QValueState,
    rounds: usize,
    record_every: usize,
) -> Result<Trajectory> {
    if q0.values.iter().map(Vec::len).collect::<Vec<_>>() != game.action_counts() {
        return Err(Error::Shape("Q-values do not match the game's action counts".into()));
    }
    if let Some(k) = game.players().iter().position(|p| p.num_actions() > 1 && !(p.temperature > 0.0)) {
        return Err(Error::ZeroTemperature { player: k });
    }
    if record_every == 0 {
        return Err(Error::Config("record_every must be positive".into()));
    }
    let temps = game.temperatures();
    let mut q = q0.clone();
    let mut x = q.policy(&temps);
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    let mut rewards: Vec<Vec<f64>> = game.action_counts().into_iter().map(|m| vec![0.0; m]).collect();
    for round in 1..=rounds {
        for (k, r) in rewards.iter_mut().enumerate() {
            game.rewards_into(k, &x, r);
        }
        for (k, r) in rewards.iter().enumerate() {
            q_update(&mut q.values[k], q.learning_rates[k], r);
        }
        x = q.policy(&temps);
        if round % record_every == 0 || round == rounds {
            times.push(round as f64);
            states.push(x.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        termination: Termination::Completed,
        steps_taken: rounds,
        clamp_events: 0,
        diagnostics: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::generators::make_amps;
    use num_rational::BigRational;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn ewa_reduces_to_q_learning_exactly() {
        let alpha = rat(1, 1000);
        let mut q = vec![rat(3, 7), rat(-2, 5), rat(0, 1)];
        let mut a = q.clone();
        let mut n = rat(1, 1);
        let params = EwaParams { rho: rat(0, 1), delta: rat(1, 1), alpha: alpha.clone() };
        for step in 0..50i64 {
            let r = vec![rat(step, 3), rat(-step - 1, 11), rat(7, step + 2)];
            let scaled: Vec<_> = r.iter().map(|v| v * &alpha).collect();
            q_update(&mut q, alpha.clone(), &r);
            ewa_update(&mut a, &mut n, params.clone(), (step % 3) as usize, &scaled).unwrap();
            assert_eq!(q, a);
            assert_eq!(n, rat(1, 1));
        }
    }

    #[test]
    fn ewa_rejects_bad_parameters() {
        let mut a = vec![0.0, 0.0];
        let mut n = 1.0;
        let bad = EwaParams { rho: 1.5, delta: 1.0, alpha: 0.1 };
        assert!(ewa_update(&mut a, &mut n, bad, 0, &[1.0, 0.0]).is_err());
        let ok = EwaParams { rho: 0.0, delta: 1.0, alpha: 0.1 };
        assert!(ewa_update(&mut a, &mut n, ok, 2, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn ewa_reinforcement_only_updates_chosen_action() {
        let mut a = vec![1.0, 1.0];
        let mut n = 1.0;
        let p = EwaParams { rho: 1.0, delta: 0.0, alpha: 0.5 };
        ewa_update(&mut a, &mut n, p, 0, &[2.0, 2.0]).unwrap();
        assert_eq!(a, vec![(0.5 + 2.0) / 2.0, 0.5 / 2.0]);
        assert_eq!(n, 2.0);
    }

    #[test]
    fn ewa_from_zero_experience() {
        let mut a = vec![5.0, -3.0];
        let mut n = 0.0;
        let p = EwaParams { rho: 1.0, delta: 0.25, alpha: 0.3 };
        ewa_update(&mut a, &mut n, p, 1, &[4.0, 8.0]).unwrap();
        assert_eq!(a, vec![1.0, 8.0]);
        assert_eq!(n, 1.0);
    }

    #[test]
    fn q_update_examples() {
        let mut q = vec![0.0];
        q_update(&mut q, 0.1, &[1.0]);
        assert_eq!(q, vec![0.1]);
        let mut q = vec![0.7, -2.0];
        q_update(&mut q, 0.37, &[0.7, -2.0]);
        assert_eq!(q, vec![0.7, -2.0]);
        let (alpha, r) = (0.05, 1.7);
        let mut q = vec![0.0];
        for _ in 0..200 {
            q_update(&mut q, alpha, &[r]);
        }
        assert!((q[0] - r * (1.0 - (1.0f64 - alpha).powi(200))).abs() < 1e-12);
    }

    #[test]
    fn discrete_play_policies_are_valid() {
        let g = make_amps().with_temperatures(&[0.5, 0.5]).unwrap();
        let q0 = QValueState::zeros(&g, 0.01).unwrap();
        let traj = discrete_play(&g, &q0, 1000, 100).unwrap();
        assert_eq!(traj.times.len(), 11);
        for s in &traj.states {
            s.validate().unwrap();
        }
    }

    #[test]
    fn discrete_play_needs_exploration() {
        let g = make_amps();
        let q0 = QValueState::zeros(&g, 0.01).unwrap();
        assert!(matches!(discrete_play(&g, &q0, 10, 1), Err(Error::ZeroTemperature { player: 0 })));
    }

    #[test]
    fn from_profile_round_trips() {
        let g = make_amps().with_temperatures(&[0.7, 0.3]).unwrap();
        let x = StrategyProfile::new(vec![vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap();
        let q = QValueState::from_profile(&g, &x, 0.1).unwrap();
        assert!(q.policy(&g.temperatures()).sup_distance(&x) < 1e-15);
    }
}
