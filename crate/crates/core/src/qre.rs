//! Quantal response equilibria: `p_k = softmax(r_k(p_-k) / T_k)` for every `k`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{field_into, rk4_step, DEFAULT_INTERIOR_FLOOR};
use crate::dynamics::softmax_scaled;
use crate::error::{Error, Result};
use crate::game::{dot, validate_auto_cheap, PolymatrixGame, StrategyProfile};

pub const DEFAULT_QRE_TOL: f64 = 1e-8;
pub const DEFAULT_QRE_MAX_ITERS: usize = 100_000;
const DAMPING: f64 = 0.5;
const STALL_WINDOW: usize = 200;
const NEWTON_START: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QreMethod {
    FixedPoint,
    Ode,
}

#[derive(Debug, Clone, Serialize)]
pub struct QreSolution {
    #[serde(serialize_with = "crate::io::serialize_profile")]
    pub profile: StrategyProfile,
    /// Sup-norm of `p − logit_map(p)`.
    pub residual: f64,
    pub iterations: usize,
    pub method: QreMethod,
    pub converged: bool,
    /// Finished with Newton steps on the fixed-point equations.
    pub polished: bool,
    /// The game is not weighted zero-sum, so other QRE may exist.
    pub local: bool,
}

/// Single-action players need no exploration rate.
fn require_exploration(game: &PolymatrixGame) -> Result<()> {
    match game.players().iter().position(|p| p.num_actions() > 1 && !(p.temperature > 0.0)) {
        Some(player) => Err(Error::ZeroTemperature { player }),
        None => Ok(()),
    }
}

/// Softmax-of-rewards map applied to every player simultaneously.
pub fn logit_map(game: &PolymatrixGame, x: &StrategyProfile) -> Result<StrategyProfile> {
    require_exploration(game)?;
    game.check_profile(x)?;
    Ok(logit_unchecked(game, x))
}

fn logit_unchecked(game: &PolymatrixGame, x: &StrategyProfile) -> StrategyProfile {
    let mut r = Vec::new();
    let strategies = game
        .players()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            r.resize(p.num_actions(), 0.0);
            game.rewards_into(k, x, &mut r);
            softmax_scaled(&r, p.temperature)
        })
        .collect();
    StrategyProfile::from_parts(strategies)
}

/// `‖x − logit_map(x)‖_∞`.
pub fn qre_residual(game: &PolymatrixGame, x: &StrategyProfile) -> Result<f64> {
    Ok(x.sup_distance(&logit_map(game, x)?))
}

/// Solves for the QRE starting from the uniform profile.
///
/// Damped iteration `x ← ½ x + ½ logit_map(x)` runs until the residual is
/// below `tol`. If the residual fails to halve over a window of 200
/// iterations, the Q-learning dynamics are integrated instead. Either phase
/// finishes with Newton steps on `x − logit_map(x) = 0` once close.
pub fn solve_qre(game: &PolymatrixGame, tol: f64, max_iters: usize) -> Result<QreSolution> {
    solve_qre_from(game, &game.uniform_profile(), tol, max_iters)
}

/// [`solve_qre`] from an arbitrary interior start.
pub fn solve_qre_from(
    game: &PolymatrixGame,
    x0: &StrategyProfile,
    tol: f64,
    max_iters: usize,
) -> Result<QreSolution> {
    prepare(game, x0, tol)?;
    let local = !zero_sum(game);
    let mut x = x0.clone();
    let mut residual = x.sup_distance(&logit_unchecked(game, &x));
    let mut window_start = residual;
    let mut iterations = 0;
    let mut best = (residual, x.clone());
    while residual > tol && iterations < max_iters {
        let target = logit_unchecked(game, &x);
        let data = x
            .as_slice()
            .iter()
            .zip(target.as_slice())
            .map(|(a, b)| (1.0 - DAMPING) * a + DAMPING * b)
            .collect();
        x = x.with_data(data);
        residual = x.sup_distance(&logit_unchecked(game, &x));
        iterations += 1;
        if residual < best.0 {
            best = (residual, x.clone());
        }
        if iterations % STALL_WINDOW == 0 {
            if residual > 0.5 * window_start {
                break;
            }
            window_start = residual;
        }
    }
    let (residual, x) = best;
    if residual <= tol {
        return Ok(finish(x, residual, iterations, QreMethod::FixedPoint, tol, false, local));
    }
    if residual < NEWTON_START {
        if let Some((p, r)) = newton(game, &x, tol) {
            if r <= tol {
                return Ok(finish(p, r, iterations, QreMethod::FixedPoint, tol, true, local));
            }
        }
    }
    log::debug!("damped iteration stalled at residual {residual:e}; integrating the dynamics");
    let mut sol = ode_phase(game, &x, tol, max_iters)?;
    sol.iterations += iterations;
    sol.local = local;
    Ok(sol)
}

/// Solves for the QRE by integrating the Q-learning dynamics from `x0`.
pub fn solve_qre_ode(
    game: &PolymatrixGame,
    x0: &StrategyProfile,
    tol: f64,
    max_iters: usize,
) -> Result<QreSolution> {
    prepare(game, x0, tol)?;
    let mut sol = ode_phase(game, x0, tol, max_iters)?;
    sol.local = !zero_sum(game);
    Ok(sol)
}

/// Runs [`solve_qre_ode`] from every start in parallel.
pub fn solve_qre_multistart(
    game: &PolymatrixGame,
    starts: &[StrategyProfile],
    tol: f64,
    max_iters: usize,
) -> Result<Vec<QreSolution>> {
    starts.par_iter().map(|x0| solve_qre_ode(game, x0, tol, max_iters)).collect()
}

fn prepare(game: &PolymatrixGame, x0: &StrategyProfile, tol: f64) -> Result<()> {
    require_exploration(game)?;
    game.check_profile(x0)?;
    x0.validate()?;
    x0.require_interior()?;
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

fn zero_sum(game: &PolymatrixGame) -> bool {
    let passed = validate_auto_cheap(game);
    if !passed {
        log::warn!("game is not weighted zero-sum; the QRE found may not be unique");
    }
    passed
}

fn finish(
    profile: StrategyProfile,
    residual: f64,
    iterations: usize,
    method: QreMethod,
    tol: f64,
    polished: bool,
    local: bool,
) -> QreSolution {
    QreSolution { profile, residual, iterations, method, converged: residual <= tol, polished, local }
}

fn ode_phase(game: &PolymatrixGame, x0: &StrategyProfile, tol: f64, max_iters: usize) -> Result<QreSolution> {
    let temps = game.temperatures();
    let h = ode_step(game);
    let mut x = x0.clone();
    let mut best = (x.sup_distance(&logit_unchecked(game, &x)), x.clone());
    let mut steps = 0;
    let mut field = vec![0.0; x.as_slice().len()];
    let mut scratch = Vec::new();
    while steps < max_iters {
        let chunk = STALL_WINDOW.min(max_iters - steps);
        for _ in 0..chunk {
            x = rk4_step(game, &temps, &x, h, DEFAULT_INTERIOR_FLOOR);
            for v in x.as_mut_slice() {
                *v = v.max(DEFAULT_INTERIOR_FLOOR);
            }
            x.renormalize();
        }
        steps += chunk;
        if x.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("QRE integration produced a non-finite state".into()));
        }
        let residual = x.sup_distance(&logit_unchecked(game, &x));
        if residual < best.0 {
            best = (residual, x.clone());
        }
        if residual <= tol {
            return Ok(finish(x, residual, steps, QreMethod::Ode, tol, false, false));
        }
        if residual < NEWTON_START {
            if let Some((p, r)) = newton(game, &x, tol) {
                if r <= tol {
                    return Ok(finish(p, r, steps, QreMethod::Ode, tol, true, false));
                }
            }
        }
        field_into(game, &temps, &x, DEFAULT_INTERIOR_FLOOR, &mut field, &mut scratch);
        let norm = field.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if norm < 1e-15 {
            break;
        }
    }
    let (residual, x) = best;
    log::warn!("QRE solver did not reach tolerance {tol:e}; best residual {residual:e}");
    Ok(finish(x, residual, steps, QreMethod::Ode, tol, false, false))
}

/// RK4 step scaled to the payoff and temperature magnitudes.
fn ode_step(game: &PolymatrixGame) -> f64 {
    let scale = (0..game.num_players())
        .map(|k| {
            let payoff: f64 = game.edges_from(k).map(|e| e.payoff.max_abs()).sum();
            payoff + game.player(k).temperature
        })
        .fold(0.0, f64::max);
    (0.5 / (1.0 + scale)).min(0.1)
}

/// Newton iteration on `F(x) = x − logit_map(x)` with backtracking. Returns
/// the best point and its residual when that improves on the start.
fn newton(game: &PolymatrixGame, x0: &StrategyProfile, tol: f64) -> Option<(StrategyProfile, f64)> {
    let n = x0.as_slice().len();
    let offsets = x0.offsets().to_vec();
    let defect = |x: &StrategyProfile| -> (DVector<f64>, f64) {
        let l = logit_unchecked(game, x);
        let f = DVector::from_iterator(n, x.as_slice().iter().zip(l.as_slice()).map(|(a, b)| a - b));
        let r = f.amax();
        (f, r)
    };
    let mut x = x0.clone();
    let (mut f, mut r) = defect(&x);
    let start = r;
    for _ in 0..30 {
        if r <= tol * 1e-2 {
            break;
        }
        let sigma = logit_unchecked(game, &x);
        let mut jac = DMatrix::<f64>::identity(n, n);
        for k in 0..game.num_players() {
            let s = sigma.player(k);
            if s.len() == 1 {
                continue;
            }
            let t = game.player(k).temperature;
            let rk = offsets[k];
            for e in game.edges_from(k) {
                let cl = offsets[e.to];
                for j in 0..e.payoff.cols() {
                    // column j of (diag σ − σσᵀ) A_kl / T
                    let col: Vec<f64> = (0..s.len()).map(|i| e.payoff.get(i, j)).collect();
                    let mean = dot(s, &col);
                    for i in 0..s.len() {
                        jac[(rk + i, cl + j)] -= s[i] * (col[i] - mean) / t;
                    }
                }
            }
        }
        let step = jac.lu().solve(&f)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.as_slice().iter().zip(step.iter()).map(|(a, d)| a - lambda * d).collect();
            if trial.iter().all(|&v| v > 0.0 && v.is_finite()) {
                let mut candidate = x.with_data(trial);
                candidate.renormalize();
                let (fc, rc) = defect(&candidate);
                if rc < r {
                    x = candidate;
                    f = fc;
                    r = rc;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (r < start).then_some((x, r))
}

/// Largest spread `max_i v_ki − min_i v_ki` of `v_k = r_k(p_-k) − T_k ln p_k`
/// over players. Zero exactly at a QRE.
pub fn check_equilibrium_property(game: &PolymatrixGame, p: &StrategyProfile) -> Result<f64> {
    require_exploration(game)?;
    game.check_profile(p)?;
    p.require_interior()?;
    let mut defect: f64 = 0.0;
    for k in 0..game.num_players() {
        if p.player(k).len() == 1 {
            continue;
        }
        let r = game.reward_vector(k, p)?;
        let t = game.player(k).temperature;
        let v: Vec<f64> = r.iter().zip(p.player(k)).map(|(ri, pi)| ri - t * pi.ln()).collect();
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        defect = defect.max(hi - lo);
    }
    Ok(defect)
}

/// Largest gain any player gets by deviating to a best pure response.
pub fn exploitability(game: &PolymatrixGame, x: &StrategyProfile) -> Result<f64> {
    game.check_profile(x)?;
    let mut gap: f64 = 0.0;
    for k in 0..game.num_players() {
        let r = game.reward_vector(k, x)?;
        let best = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        gap = gap.max(best - dot(x.player(k), &r));
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::generators::{make_amps, make_rps, AMPS_NASH};
    use crate::game::{Matrix, Player};

    fn rps(t: f64) -> PolymatrixGame {
        make_rps().with_temperatures(&[t, t]).unwrap()
    }

    #[test]
    fn logit_examples() {
        let g = rps(0.3);
        let u = g.uniform_profile();
        assert!(logit_map(&g, &u).unwrap().sup_distance(&u) < 1e-15);

        let zero = PolymatrixGame::builder()
            .player(Player::new("a", 2).with_temperature(1.0))
            .player(Player::new("b", 3).with_temperature(0.2))
            .edge(0, 1, Matrix::zeros(2, 3), Matrix::zeros(3, 2))
            .build()
            .unwrap();
        let x = StrategyProfile::new(vec![vec![0.9, 0.1], vec![0.2, 0.3, 0.5]]).unwrap();
        assert_eq!(logit_map(&zero, &x).unwrap(), zero.uniform_profile());

        // one player with rewards (1, 0) against a single-action opponent
        let g = PolymatrixGame::builder()
            .player(Player::new("a", 2).with_temperature(1.0))
            .player(Player::new("d", 1).with_temperature(1.0))
            .edge(0, 1, Matrix::from_rows(&[&[1.0], &[0.0]]).unwrap(), Matrix::from_rows(&[&[-1.0, 0.0]]).unwrap())
            .build()
            .unwrap();
        let e = std::f64::consts::E;
        let y = logit_map(&g, &g.uniform_profile()).unwrap();
        assert!((y.player(0)[0] - e / (1.0 + e)).abs() < 1e-15);

        assert!(matches!(logit_map(&make_rps(), &u), Err(Error::ZeroTemperature { player: 0 })));
    }

    #[test]
    fn rps_qre_is_uniform() {
        for t in [0.05, 0.1, 1.0, 10.0] {
            let sol = solve_qre(&rps(t), DEFAULT_QRE_TOL, DEFAULT_QRE_MAX_ITERS).unwrap();
            assert!(sol.converged && !sol.local);
            assert!(sol.profile.sup_distance(&rps(t).uniform_profile()) < 1e-8);
        }
    }

    #[test]
    fn amps_qre_approaches_nash() {
        let ne = StrategyProfile::new(vec![AMPS_NASH.0.to_vec(), AMPS_NASH.1.to_vec()]).unwrap();
        let mut last = f64::INFINITY;
        for t in [1.0, 0.3, 0.1, 0.03, 0.01] {
            let g = make_amps().with_temperatures(&[t, t]).unwrap();
            let sol = solve_qre(&g, 1e-12, DEFAULT_QRE_MAX_ITERS).unwrap();
            assert!(sol.converged, "t = {t}: residual {}", sol.residual);
            let d = sol.profile.sup_distance(&ne);
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn equilibrium_property() {
        let g = make_amps().with_temperatures(&[1.0, 1.0]).unwrap();
        assert!(check_equilibrium_property(&g, &g.uniform_profile()).unwrap() > 1e-3);
        let sol = solve_qre(&g, DEFAULT_QRE_TOL, DEFAULT_QRE_MAX_ITERS).unwrap();
        assert!(check_equilibrium_property(&g, &sol.profile).unwrap() <= 10.0 * DEFAULT_QRE_TOL);
        let vertex = StrategyProfile::pure(&[2, 2], &[0, 0]).unwrap();
        assert!(check_equilibrium_property(&g, &vertex).is_err());
    }

    #[test]
    fn exploitability_examples() {
        let g = make_rps();
        assert_eq!(exploitability(&g, &g.uniform_profile()).unwrap(), 0.0);
        let rock = StrategyProfile::pure(&[3, 3], &[0, 0]).unwrap();
        assert_eq!(exploitability(&g, &rock).unwrap(), 1.0);
    }

    #[test]
    fn hot_qre_is_nearly_uniform() {
        let g = make_amps().with_temperatures(&[1e3, 1e3]).unwrap();
        let sol = solve_qre(&g, DEFAULT_QRE_TOL, DEFAULT_QRE_MAX_ITERS).unwrap();
        assert!(sol.profile.sup_distance(&g.uniform_profile()) < 1e-3);
    }

    #[test]
    fn ode_path_agrees_with_fixed_point() {
        let g = make_amps().with_temperatures(&[0.2, 0.4]).unwrap();
        let a = solve_qre(&g, 1e-10, DEFAULT_QRE_MAX_ITERS).unwrap();
        let x0 = StrategyProfile::new(vec![vec![0.9, 0.1], vec![0.05, 0.95]]).unwrap();
        let b = solve_qre_ode(&g, &x0, 1e-10, DEFAULT_QRE_MAX_ITERS).unwrap();
        assert_eq!(b.method, QreMethod::Ode);
        assert!(a.profile.sup_distance(&b.profile) < 1e-8);
    }
}
