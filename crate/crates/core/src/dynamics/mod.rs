//! Boltzmann Q-learning: discrete updates and the continuous-time dynamics
//!
//! ```text
//! ẋ_ki = x_ki [ r_ki(x_-k) − x_kᵀ r_k(x_-k) − T_k (ln x_ki − x_kᵀ ln x_k) ]
//! ```
//!
//! With every `T_k = 0` this is the replicator dynamics.

mod discrete;
mod integrate;

pub use discrete::{discrete_play, ewa_update, q_update, EwaParams, QValueState};
pub use integrate::{integrate, IntegratorConfig, Method, Termination, Trajectory};
pub(crate) use integrate::rk4_step;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{dot, PolymatrixGame, StrategyProfile};

/// Probability floor applied before taking logarithms.
pub const DEFAULT_INTERIOR_FLOOR: f64 = 1e-12;

/// Per-player tangent vectors of the dynamics at a profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldValue {
    pub per_player: Vec<Vec<f64>>,
    /// Some positive entry was below the floor and its logarithm was clamped.
    pub clamped: bool,
}

impl FieldValue {
    pub fn sup_norm(&self) -> f64 {
        self.per_player.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The Q-learning vector field at `x` using the game's exploration rates.
pub fn qlearning_vector_field(game: &PolymatrixGame, x: &StrategyProfile) -> Result<FieldValue> {
    qlearning_vector_field_with(game, x, &game.temperatures(), DEFAULT_INTERIOR_FLOOR)
}

/// The Q-learning vector field with explicit exploration rates and floor.
pub fn qlearning_vector_field_with(
    game: &PolymatrixGame,
    x: &StrategyProfile,
    temperatures: &[f64],
    floor: f64,
) -> Result<FieldValue> {
    game.check_profile(x)?;
    if temperatures.len() != game.num_players() {
        return Err(Error::Shape(format!(
            "expected {} temperatures, got {}",
            game.num_players(),
            temperatures.len()
        )));
    }
    let mut out = vec![0.0; x.as_slice().len()];
    let mut scratch = Vec::new();
    let clamped = field_into(game, temperatures, x, floor, &mut out, &mut scratch);
    let per_player = x
        .offsets()
        .windows(2)
        .map(|w| out[w[0]..w[1]].to_vec())
        .collect();
    Ok(FieldValue { per_player, clamped })
}

/// Writes the field into the flat buffer `out`. Returns true when a
/// logarithm was clamped at `floor`.
///
/// Coordinates that are exactly zero contribute nothing (`0 · ln 0 = 0`).
pub(crate) fn field_into(
    game: &PolymatrixGame,
    temperatures: &[f64],
    x: &StrategyProfile,
    floor: f64,
    out: &mut [f64],
    scratch: &mut Vec<f64>,
) -> bool {
    let mut clamped = false;
    let offsets = x.offsets();
    for k in 0..game.num_players() {
        let xk = x.player(k);
        let m = xk.len();
        scratch.resize(2 * m, 0.0);
        let (r, logs) = scratch.split_at_mut(m);
        game.rewards_into(k, x, r);
        let mean_reward = dot(xk, r);
        let out_k = &mut out[offsets[k]..offsets[k + 1]];
        let t = temperatures[k];
        if t > 0.0 {
            let mut mean_log = 0.0;
            for (l, &v) in logs.iter_mut().zip(xk) {
                if v == 0.0 {
                    *l = 0.0;
                    continue;
                }
                if v < floor {
                    clamped = true;
                }
                *l = v.max(floor).ln();
                mean_log += v * *l;
            }
            for i in 0..m {
                out_k[i] = xk[i] * (r[i] - mean_reward - t * (logs[i] - mean_log));
            }
        } else {
            for i in 0..m {
                out_k[i] = xk[i] * (r[i] - mean_reward);
            }
        }
    }
    clamped
}

/// Replicator field `x_ki (r_ki − u_k(x))`, computed through the game's
/// utility routine rather than the Q-learning field code.
pub fn replicator_field(game: &PolymatrixGame, x: &StrategyProfile) -> Result<Vec<Vec<f64>>> {
    (0..game.num_players())
        .map(|k| {
            let r = game.reward_vector(k, x)?;
            let u = game.utility(x, k)?;
            Ok(x.player(k).iter().zip(&r).map(|(xi, ri)| xi * (ri - u)).collect())
        })
        .collect()
}

/// Boltzmann (softmax) policy `x_i ∝ exp(Q_i / T)`.
///
/// A zero temperature is refused; the argmax limit is not implemented here.
pub fn boltzmann_policy(q: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!(
            "Boltzmann policy needs a positive temperature, got {temperature}"
        )));
    }
    if q.is_empty() || q.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("Q-values must be finite and non-empty".into()));
    }
    Ok(softmax_scaled(q, temperature))
}

/// `softmax(v / t)` with max-subtraction. A single entry maps to `[1]` for
/// any `t`.
pub(crate) fn softmax_scaled(v: &[f64], t: f64) -> Vec<f64> {
    if v.len() == 1 {
        return vec![1.0];
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = v.iter().map(|q| ((q - max) / t).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
    out
}

/// `Q(t) = α ∫₀ᵗ e^{−αs} r(t − s) ds` for a Q-value started at zero, by
/// composite Simpson's rule on 10⁴ panels.
pub fn q_continuous_closed_form(reward: impl Fn(f64) -> f64, alpha: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    const PANELS: usize = 10_000;
    let h = t / PANELS as f64;
    let integrand = |s: f64| (-alpha * s).exp() * reward(t - s);
    let mut sum = integrand(0.0) + integrand(t);
    for i in 1..PANELS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * integrand(i as f64 * h);
    }
    Ok(alpha * sum * h / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::generators::{make_rps, random_weighted_zero_sum, RandomGameSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softmax_examples() {
        assert_eq!(boltzmann_policy(&[0.0, 0.0], 0.3).unwrap(), vec![0.5, 0.5]);
        let p = boltzmann_policy(&[1.0, 0.0], 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((p[0] - e / (1.0 + e)).abs() < 1e-15);
        assert!((p[1] - 1.0 / (1.0 + e)).abs() < 1e-15);
        let hot = boltzmann_policy(&[1.0, 0.0], 1000.0).unwrap();
        assert!((hot[0] - 0.5).abs() < 1e-3 && (hot[1] - 0.5).abs() < 1e-3);
        assert!(boltzmann_policy(&[1.0, 0.0], 0.0).is_err());
        let big = boltzmann_policy(&[1e6, 0.0, -1e6], 0.01).unwrap();
        assert!((big.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_constant_reward() {
        let (alpha, r) = (0.3, 2.5);
        for t in [0.5, 1.0, 7.0] {
            let q = q_continuous_closed_form(|_| r, alpha, t).unwrap();
            assert!((q - r * (1.0 - (-alpha * t).exp())).abs() < 1e-12);
        }
        assert_eq!(q_continuous_closed_form(|_| 1.0, 0.3, 0.0).unwrap(), 0.0);
        assert!(q_continuous_closed_form(|_| 1.0, 0.3, -1.0).is_err());
    }

    /// Adaptive Simpson oracle, written independently of the fixed-panel rule.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, eps: f64, depth: u32) -> f64 {
            let c = 0.5 * (a + b);
            let (left, right) = (simpson(f, a, c), simpson(f, c, b));
            if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
                return left + right + (left + right - whole) / 15.0;
            }
            recurse(f, a, c, left, eps / 2.0, depth - 1) + recurse(f, c, b, right, eps / 2.0, depth - 1)
        }
        recurse(f, a, b, simpson(f, a, b), eps, depth)
    }

    #[test]
    fn closed_form_exponential_reward_matches_adaptive_oracle() {
        let alpha = 0.4;
        for t in [0.3, 2.0, 5.0] {
            let q = q_continuous_closed_form(|s| (alpha * s).exp(), alpha, t).unwrap();
            // second form of the convolution: α e^{−αt} ∫₀ᵗ e^{αs} r(s) ds
            let inner = adaptive_simpson(&|s: f64| (2.0 * alpha * s).exp(), 0.0, t, 1e-13, 40);
            let oracle = alpha * (-alpha * t).exp() * inner;
            assert!((q - oracle).abs() < 1e-8, "{q} vs {oracle}");
            assert!((q - (alpha * t).sinh()).abs() < 1e-8);
        }
    }

    #[test]
    fn field_is_tangent_and_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let g = random_weighted_zero_sum(
                &mut rng,
                &RandomGameSpec {
                    players: 4,
                    max_actions: 5,
                    temperature_range: (0.0, 2.0),
                    ..Default::default()
                },
            );
            let x = StrategyProfile::random_dirichlet(&g.action_counts(), &mut rng);
            let f = qlearning_vector_field(&g, &x).unwrap();
            for v in &f.per_player {
                assert!(v.iter().sum::<f64>().abs() <= 1e-12);
                assert!(v.iter().all(|c| c.is_finite()));
            }
        }
    }

    #[test]
    fn zero_temperature_field_is_replicator() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let g = random_weighted_zero_sum(&mut rng, &RandomGameSpec { players: 3, ..Default::default() });
            let x = StrategyProfile::random_dirichlet(&g.action_counts(), &mut rng);
            let f = qlearning_vector_field(&g, &x).unwrap();
            let rep = replicator_field(&g, &x).unwrap();
            for (a, b) in f.per_player.iter().flatten().zip(rep.iter().flatten()) {
                assert!((a - b).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn uniform_rps_is_a_rest_point_without_exploration() {
        let g = make_rps();
        let f = qlearning_vector_field(&g, &g.uniform_profile()).unwrap();
        assert!(f.sup_norm() < 1e-15);
    }

    #[test]
    fn boundary_coordinates_do_not_move() {
        let g = make_rps().with_temperatures(&[0.5, 0.2]).unwrap();
        let x = StrategyProfile::new(vec![vec![0.0, 0.4, 0.6], vec![1.0, 0.0, 0.0]]).unwrap();
        let f = qlearning_vector_field(&g, &x).unwrap();
        assert_eq!(f.per_player[0][0], 0.0);
        assert!(f.per_player[1].iter().all(|&v| v == 0.0));
        assert!(!f.clamped);
    }

    #[test]
    fn tiny_entries_are_clamped_not_nan() {
        let g = make_rps().with_temperatures(&[0.5, 0.5]).unwrap();
        let x = StrategyProfile::new(vec![vec![1e-300, 0.5, 0.5 - 1e-300], vec![1.0 / 3.0; 3]]).unwrap();
        let f = qlearning_vector_field(&g, &x).unwrap();
        assert!(f.clamped);
        assert!(f.per_player.iter().flatten().all(|v| v.is_finite()));
    }

    #[test]
    fn replicator_scale_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g = random_weighted_zero_sum(&mut rng, &RandomGameSpec { players: 3, ..Default::default() });
        let x = StrategyProfile::random_dirichlet(&g.action_counts(), &mut rng);
        let c = 3.5;
        let mut b = PolymatrixGame::builder();
        for p in g.players() {
            b = b.player(p.clone());
        }
        for e in g.edges() {
            let m = if e.from == 0 { e.payoff.scaled(c) } else { e.payoff.clone() };
            b = b.directed_edge(e.from, e.to, m);
        }
        let scaled = b.build().unwrap();
        let f = replicator_field(&g, &x).unwrap();
        let fs = replicator_field(&scaled, &x).unwrap();
        for (a, b) in f[0].iter().zip(&fs[0]) {
            assert!((c * a - b).abs() < 1e-12);
        }
        assert_eq!(f[1], fs[1]);
    }
}
