//! KL-divergence Lyapunov function `Φ(x) = Σ_k w_k D(p_k ‖ x_k)` measured
//! from the QRE `p`, and numeric certification along trajectories.
//!
//! For a weighted zero-sum game with every `T_k > 0`,
//!
//! ```text
//! dΦ/dt = −Σ_k w_k T_k [ D(p_k ‖ x_k) + D(x_k ‖ p_k) ]
//! ```
//!
//! which gives `Φ(t) ≤ Φ(0) e^{−min_k T_k t}`.

use serde::Serialize;

use crate::dynamics::{rk4_step, Trajectory, DEFAULT_INTERIOR_FLOOR};
use crate::error::{Error, Result};
use crate::game::{dot, PolymatrixGame, StrategyProfile, ValidatedGame};
use crate::qre::{exploitability, qre_residual};

/// Largest QRE residual accepted for a reference profile.
pub const QRE_REFERENCE_TOL: f64 = 1e-8;
pub const MONOTONE_SLACK: f64 = 1e-10;
pub const RATE_SLACK: f64 = 1e-6;
pub const FD_STEP: f64 = 1e-5;
pub const FD_RELATIVE_TOL: f64 = 1e-3;
/// Absolute floor added to the finite-difference comparison.
pub const FD_ABSOLUTE_TOL: f64 = 1e-14;

/// `D(p ‖ x) = Σ_i p_i ln(p_i / x_i)` with `0 ln 0 = 0`.
///
/// Positive entries of `x` below [`DEFAULT_INTERIOR_FLOOR`] are raised to it.
/// Returns `+∞` when `x_i = 0 < p_i`.
pub fn kl_divergence(p: &[f64], x: &[f64]) -> Result<f64> {
    if p.len() != x.len() {
        return Err(Error::Shape(format!("KL of vectors of lengths {} and {}", p.len(), x.len())));
    }
    Ok(kl(p, x))
}

/// Summed as `Σ_i [p_i ln(p_i / x_i) − p_i + x_i]`, which equals the KL
/// divergence on the simplex and has no first-order sensitivity to rounding
/// in `Σ x_i`.
pub(crate) fn kl(p: &[f64], x: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&pi, &xi) in p.iter().zip(x) {
        if pi == 0.0 {
            total += xi;
            continue;
        }
        if xi == 0.0 {
            return f64::INFINITY;
        }
        let xi = xi.max(DEFAULT_INTERIOR_FLOOR);
        total += pi * ((pi - xi) / xi).ln_1p() - (pi - xi);
    }
    total.max(0.0)
}

/// `Σ_k w_k D(p_k ‖ x_k)`.
pub fn weighted_kl(game: &PolymatrixGame, p: &StrategyProfile, x: &StrategyProfile) -> Result<f64> {
    game.check_profile(p)?;
    game.check_profile(x)?;
    Ok(weighted_kl_unchecked(&game.weights(), p, x))
}

fn weighted_kl_unchecked(weights: &[f64], p: &StrategyProfile, x: &StrategyProfile) -> f64 {
    p.players().zip(x.players()).zip(weights).map(|((pk, xk), w)| w * kl(pk, xk)).sum()
}

fn require_interior_simplex(v: &[f64], name: &str) -> Result<()> {
    if v.len() < 2 || v.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::Domain(format!("{name} must be an interior simplex point")));
    }
    if (v.iter().sum::<f64>() - 1.0).abs() > crate::game::SIMPLEX_TOL {
        return Err(Error::Domain(format!("{name} does not sum to 1")));
    }
    Ok(())
}

/// `|D(p‖x) + D(x‖p) − (x − p)ᵀ(ln x − ln p)|` for interior `p`, `x`.
pub fn symmetric_sum_identity_check(p: &[f64], x: &[f64]) -> Result<f64> {
    require_interior_simplex(p, "p")?;
    require_interior_simplex(x, "x")?;
    if p.len() != x.len() {
        return Err(Error::Shape("p and x differ in length".into()));
    }
    let left = kl(p, x) + kl(x, p);
    let right: f64 = x.iter().zip(p).map(|(a, b)| (a - b) * (a.ln() - b.ln())).sum();
    Ok((left - right).abs())
}

/// `|Σ_k w_k [x_kᵀ r_k(p_-k) + p_kᵀ r_k(x_-k)]|`, which vanishes for any two
/// profiles of a weighted zero-sum polymatrix game.
pub fn summation_identity_check(game: &ValidatedGame, p: &StrategyProfile, x: &StrategyProfile) -> Result<f64> {
    Ok(summation_terms(game, p, x)?.abs())
}

fn summation_terms(game: &PolymatrixGame, p: &StrategyProfile, x: &StrategyProfile) -> Result<f64> {
    let mut total = 0.0;
    for (k, w) in game.weights().into_iter().enumerate() {
        let rp = game.reward_vector(k, p)?;
        let rx = game.reward_vector(k, x)?;
        total += w * (dot(x.player(k), &rp) + dot(p.player(k), &rx));
    }
    Ok(total)
}

/// `Σ_k w_k (x_k − p_k)ᵀ [r_k(x_-k) − r_k(p_-k)]`.
pub fn cross_term(game: &PolymatrixGame, p: &StrategyProfile, x: &StrategyProfile) -> Result<f64> {
    let mut total = 0.0;
    for (k, w) in game.weights().into_iter().enumerate() {
        let rp = game.reward_vector(k, p)?;
        let rx = game.reward_vector(k, x)?;
        let d: f64 = x
            .player(k)
            .iter()
            .zip(p.player(k))
            .zip(rx.iter().zip(&rp))
            .map(|((xi, pi), (a, b))| (xi - pi) * (a - b))
            .sum();
        total += w * d;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlDerivative {
    /// `d/dt D(p_k ‖ x_k) = (x_k − p_k)ᵀ[r_k(x) − r_k(p)] − T_k [D(p_k‖x_k) + D(x_k‖p_k)]`.
    pub per_player: Vec<f64>,
    /// `Σ_k w_k · per_player[k]`.
    pub total: f64,
    /// `−Σ_k w_k T_k [D(p_k‖x_k) + D(x_k‖p_k)]`.
    pub formula: f64,
}

/// Time derivative of the weighted KL divergence from the QRE `p` along the
/// dynamics at `x`.
pub fn kl_time_derivative(game: &ValidatedGame, p: &StrategyProfile, x: &StrategyProfile) -> Result<KlDerivative> {
    let residual = qre_residual(game, p)?;
    if !(residual <= QRE_REFERENCE_TOL) {
        return Err(Error::NotQre { residual });
    }
    game.check_profile(x)?;
    x.require_interior()?;
    let weights = game.weights();
    let mut per_player = Vec::with_capacity(game.num_players());
    let mut total = 0.0;
    for k in 0..game.num_players() {
        let rp = game.reward_vector(k, p)?;
        let rx = game.reward_vector(k, x)?;
        let (pk, xk) = (p.player(k), x.player(k));
        let cross: f64 = xk.iter().zip(pk).zip(rx.iter().zip(&rp)).map(|((a, b), (c, d))| (a - b) * (c - d)).sum();
        let v = cross - game.player(k).temperature * (kl(pk, xk) + kl(xk, pk));
        total += weights[k] * v;
        per_player.push(v);
    }
    Ok(KlDerivative { per_player, total, formula: formula_derivative(game, p, x) })
}

fn formula_derivative(game: &PolymatrixGame, p: &StrategyProfile, x: &StrategyProfile) -> f64 {
    -game
        .players()
        .iter()
        .zip(p.players().zip(x.players()))
        .map(|(pl, (pk, xk))| pl.weight * pl.temperature * (kl(pk, xk) + kl(xk, pk)))
        .sum::<f64>()
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovReport {
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    pub formula_derivative: Vec<f64>,
    pub fd_derivative: Vec<f64>,
    /// Empty when some player does not explore.
    pub rate_bound: Vec<f64>,
    pub monotone: bool,
    /// Largest `Φ(t_{i+1}) − Φ(t_i)`.
    pub max_increase: f64,
    pub rate_bound_holds: Option<bool>,
    /// Largest `Φ(t) / bound(t) − 1`.
    pub max_rate_excess: Option<f64>,
    pub derivative_agrees: Option<bool>,
    /// Largest `|fd − formula| / |formula|` over stamps where `|formula|`
    /// exceeds `FD_ABSOLUTE_TOL / FD_RELATIVE_TOL`, so that the relative
    /// tolerance is the binding one.
    pub max_derivative_error: Option<f64>,
    pub warnings: Vec<String>,
}

impl LyapunovReport {
    /// Every applicable check passed.
    pub fn passed(&self) -> bool {
        self.monotone && self.rate_bound_holds != Some(false) && self.derivative_agrees != Some(false)
    }
}

/// Evaluates `Φ`, the derivative formula, a centered finite difference and
/// the exponential bound at every recorded state, and checks them.
///
/// The finite difference advances each recorded state by `±1e-5` with one
/// RK4 step of the dynamics at the game's exploration rates. When a player
/// has `T_k = 0` the bound and derivative checks are skipped with a warning
/// and `p` only needs to be a Nash equilibrium.
pub fn certify_trajectory(game: &ValidatedGame, trajectory: &Trajectory, p: &StrategyProfile) -> Result<LyapunovReport> {
    game.check_profile(p)?;
    let mut warnings = Vec::new();
    let explores = game.fully_exploratory();
    if explores {
        let residual = qre_residual(game, p)?;
        if !(residual <= QRE_REFERENCE_TOL) {
            return Err(Error::NotQre { residual });
        }
    } else {
        warnings.push("a player has zero exploration rate; rate bound and derivative checks skipped".into());
        let gap = exploitability(game, p)?;
        if gap > 1e-6 {
            warnings.push(format!("reference profile has exploitability {gap:e}"));
        }
    }
    let weights = game.weights();
    let temps = game.temperatures();
    let phi_of = |x: &StrategyProfile| weighted_kl_unchecked(&weights, p, x);
    let n = trajectory.states.len();
    let mut phi = Vec::with_capacity(n);
    let mut formula = Vec::with_capacity(n);
    let mut fd = Vec::with_capacity(n);
    for x in &trajectory.states {
        game.check_profile(x)?;
        phi.push(phi_of(x));
        formula.push(formula_derivative(game, p, x));
        let ahead = rk4_step(game, &temps, x, FD_STEP, DEFAULT_INTERIOR_FLOOR);
        let behind = rk4_step(game, &temps, x, -FD_STEP, DEFAULT_INTERIOR_FLOOR);
        fd.push((phi_of(&ahead) - phi_of(&behind)) / (2.0 * FD_STEP));
    }
    if phi.iter().any(|v| v.is_infinite()) {
        warnings.push("some states leave the support of the reference; Φ is +∞ there".into());
    }

    let max_increase = phi.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let monotone = phi.len() < 2 || max_increase <= MONOTONE_SLACK;

    let (rate_bound, rate_bound_holds, max_rate_excess) = if explores {
        let t_min = game.min_exploration();
        let bound: Vec<f64> = trajectory.times.iter().map(|t| phi[0] * (-t_min * t).exp()).collect();
        let holds = phi.iter().zip(&bound).all(|(v, b)| *v <= b * (1.0 + RATE_SLACK));
        let excess = phi
            .iter()
            .zip(&bound)
            .filter(|(_, b)| **b > 0.0)
            .map(|(v, b)| v / b - 1.0)
            .fold(f64::NEG_INFINITY, f64::max);
        (bound, Some(holds), Some(excess))
    } else {
        (Vec::new(), None, None)
    };

    let (derivative_agrees, max_derivative_error) = if explores {
        let agrees = fd
            .iter()
            .zip(&formula)
            .all(|(a, b)| (a - b).abs() <= FD_RELATIVE_TOL * b.abs() + FD_ABSOLUTE_TOL);
        let err = fd
            .iter()
            .zip(&formula)
            .filter(|(_, b)| b.abs() > FD_ABSOLUTE_TOL / FD_RELATIVE_TOL)
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        (Some(agrees), Some(err))
    } else {
        (None, None)
    };

    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(LyapunovReport {
        times: trajectory.times.clone(),
        phi,
        formula_derivative: formula,
        fd_derivative: fd,
        rate_bound,
        monotone,
        max_increase,
        rate_bound_holds,
        max_rate_excess,
        derivative_agrees,
        max_derivative_error,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, IntegratorConfig};
    use crate::experiments::generators::{make_match_mismatch, make_rps, random_weighted_zero_sum, RandomGameSpec};
    use crate::game::Player;
    use crate::qre::solve_qre;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::ToPrimitive;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kl_examples() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let v = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(kl_divergence(&[1.0], &[0.5, 0.5]).is_err());
    }

    /// Exact rational ratios `p_i / x_i`, logarithm taken only at the end.
    fn rational_kl(p: &[BigRational], x: &[BigRational]) -> f64 {
        p.iter()
            .zip(x)
            .map(|(a, b)| a.to_f64().unwrap() * (a / b).to_f64().unwrap().ln())
            .sum()
    }

    fn random_rational_simplex(rng: &mut ChaCha8Rng, m: usize) -> Vec<BigRational> {
        let raw: Vec<i64> = (0..m).map(|_| rng.random_range(1..10_000)).collect();
        let total: i64 = raw.iter().sum();
        raw.iter().map(|&v| BigRational::new(BigInt::from(v), BigInt::from(total))).collect()
    }

    #[test]
    fn kl_matches_rational_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let p = random_rational_simplex(&mut rng, 3);
            let x = random_rational_simplex(&mut rng, 3);
            let pf: Vec<f64> = p.iter().map(|v| v.to_f64().unwrap()).collect();
            let xf: Vec<f64> = x.iter().map(|v| v.to_f64().unwrap()).collect();
            assert!((kl(&pf, &xf) - rational_kl(&p, &x)).abs() < 1e-12);
        }
    }

    #[test]
    fn kl_is_asymmetric_somewhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let found = (0..100).any(|_| {
            let x = StrategyProfile::random_dirichlet(&[3, 3], &mut rng);
            let (p, q) = (x.player(0), x.player(1));
            (kl(p, q) - kl(q, p)).abs() > 1e-3
        });
        assert!(found);
    }

    #[test]
    fn symmetric_identity_examples() {
        assert_eq!(symmetric_sum_identity_check(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let (p, x) = ([0.9, 0.1], [0.5, 0.5]);
        let right = (0.5 - 0.9) * (0.5f64.ln() - 0.9f64.ln()) + (0.5 - 0.1) * (0.5f64.ln() - 0.1f64.ln());
        let left = 0.9 * (0.9f64 / 0.5).ln() + 0.1 * (0.1f64 / 0.5).ln() + 0.5 * (0.5f64 / 0.9).ln() + 0.5 * (0.5f64 / 0.1).ln();
        assert!((left - right).abs() < 1e-14);
        assert!(symmetric_sum_identity_check(&p, &x).unwrap() < 1e-14);
        assert!(symmetric_sum_identity_check(&[1.0, 0.0], &x).is_err());
    }

    #[test]
    fn weighted_kl_scales_with_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let g = random_weighted_zero_sum(&mut rng, &RandomGameSpec::default());
        let p = StrategyProfile::random_dirichlet(&g.action_counts(), &mut rng);
        let x = StrategyProfile::random_dirichlet(&g.action_counts(), &mut rng);
        let doubled: Vec<f64> = g.weights().iter().map(|w| 2.0 * w).collect();
        let a = weighted_kl(&g, &p, &x).unwrap();
        let b = weighted_kl(&g.with_weights(&doubled).unwrap(), &p, &x).unwrap();
        assert!((2.0 * a - b).abs() < 1e-14);
        assert_eq!(weighted_kl(&g, &p, &p).unwrap(), 0.0);
    }

    #[test]
    fn summation_identity_and_cross_term() {
        let g = ValidatedGame::new(make_match_mismatch(3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..50 {
            let p = StrategyProfile::random_dirichlet(&g.action_counts(), &mut rng);
            let x = StrategyProfile::random_dirichlet(&g.action_counts(), &mut rng);
            assert!(summation_identity_check(&g, &p, &x).unwrap() < 1e-12);
            assert!(cross_term(&g, &p, &x).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_refuses_non_qre_reference() {
        let g = ValidatedGame::new(make_rps().with_temperatures(&[0.5, 0.5]).unwrap()).unwrap();
        let p = StrategyProfile::new(vec![vec![0.5, 0.25, 0.25], vec![1.0 / 3.0; 3]]).unwrap();
        let x = g.uniform_profile();
        assert!(matches!(kl_time_derivative(&g, &p, &x), Err(Error::NotQre { .. })));
        let d = kl_time_derivative(&g, &x, &x).unwrap();
        assert_eq!(d.total, 0.0);
    }

    #[test]
    fn derivative_is_negative_off_the_qre() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let spec = RandomGameSpec { players: 4, temperature_range: (0.1, 1.0), ..Default::default() };
        for _ in 0..10 {
            let g = ValidatedGame::new(random_weighted_zero_sum(&mut rng, &spec)).unwrap();
            let p = solve_qre(&g, 1e-12, 100_000).unwrap().profile;
            let x = StrategyProfile::random_dirichlet(&g.action_counts(), &mut rng);
            let d = kl_time_derivative(&g, &p, &x).unwrap();
            assert!(d.formula < 0.0);
            assert!((d.total - d.formula).abs() <= 1e-9 * (1.0 + d.formula.abs()));
        }
    }

    #[test]
    fn single_player_entropic_decay() {
        let t = 0.8;
        let g = ValidatedGame::new(
            PolymatrixGame::builder()
                .player(Player::new("solo", 3).with_temperature(t))
                .build()
                .unwrap(),
        )
        .unwrap();
        let p = g.uniform_profile();
        let x0 = StrategyProfile::new(vec![vec![0.7, 0.2, 0.1]]).unwrap();
        let cfg = IntegratorConfig::rk4().with_horizon(5.0 / t).with_record_every(10);
        let traj = integrate(&g, &x0, &cfg, None).unwrap();
        let report = certify_trajectory(&g, &traj, &p).unwrap();
        assert!(report.monotone && report.rate_bound_holds == Some(true));
        // near the QRE both divergences are ≈ Φ, so Φ decays like e^{−2Tt}
        let at = |time: f64| {
            let i = report.times.iter().position(|&s| s >= time).unwrap();
            (report.times[i], report.phi[i])
        };
        let ((t0, f0), (t1, f1)) = (at(3.0 / t), at(5.0 / t));
        let slope = -(f1 / f0).ln() / (t1 - t0);
        assert!((slope / (2.0 * t) - 1.0).abs() < 0.02, "slope {slope}");
    }

    #[test]
    fn rps_certificate() {
        let g = ValidatedGame::new(make_rps().with_temperatures(&[0.1, 0.1]).unwrap()).unwrap();
        let p = g.uniform_profile();
        let x0 = StrategyProfile::new(vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.2, 0.6]]).unwrap();
        let cfg = IntegratorConfig::rk4().with_horizon(100.0).with_record_every(20);
        let traj = integrate(&g, &x0, &cfg, None).unwrap();
        let report = certify_trajectory(&g, &traj, &p).unwrap();
        assert!(report.passed(), "{report:?}");

        let constant = integrate(&g, &p, &cfg, None).unwrap();
        let report = certify_trajectory(&g, &constant, &p).unwrap();
        assert!(report.passed());
        assert!(report.phi.iter().all(|&v| v == 0.0));
    }
}
