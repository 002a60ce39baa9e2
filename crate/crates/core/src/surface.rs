//! Two-dimensional slices of the KL-divergence to the QRE for games whose
//! players have two actions.
//!
//! Each player's first-action probability is mapped to logit space, the slice
//! is `z = α ũ + β ṽ` for two direction vectors `ũ`, `ṽ`, and every point is
//! mapped back coordinate-wise with the logistic sigmoid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{PolymatrixGame, StrategyProfile};
use crate::qre::solve_qre;

pub const DEFAULT_RANGE: (f64, f64) = (-3.0, 3.0);
pub const DEFAULT_POINTS: usize = 61;
const SURFACE_QRE_TOL: f64 = 1e-12;

/// Direction vectors of the slice, as first-action probabilities in (0, 1),
/// one entry per two-action player.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceBasis {
    /// Entries drawn uniformly from (0, 1).
    Random { seed: u64 },
    Explicit { u: Vec<f64>, v: Vec<f64> },
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceGrid {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// `values[i][j]` at `(alphas[i], betas[j])`.
    pub values: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Indices of the two-action players, in the order of `u` and `v`.
    pub players: Vec<usize>,
    #[serde(serialize_with = "crate::io::serialize_profile")]
    pub qre: StrategyProfile,
}

impl SurfaceGrid {
    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// `(alpha, beta, kl)` rows in grid order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.alphas.iter().enumerate().flat_map(move |(i, &a)| {
            self.betas.iter().enumerate().map(move |(j, &b)| (a, b, self.values[i][j]))
        })
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `ln(1 + e^s)` without overflow.
fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `q ln(q/z) + (1−q) ln((1−q)/(1−z))` with `z = sigmoid(s)`, evaluated in
/// log-sigmoid form.
fn binary_kl_logit(q: f64, s: f64) -> f64 {
    let neg_entropy = q * q.ln() + (1.0 - q) * (1.0 - q).ln();
    (neg_entropy + q * softplus(-s) + (1.0 - q) * softplus(s)).max(0.0)
}

/// Evaluates the KL divergence from the QRE over the `(α, β)` grid.
///
/// Single-action players are skipped. Players with more than two actions
/// are refused.
pub fn lyapunov_surface(
    game: &PolymatrixGame,
    alphas: &[f64],
    betas: &[f64],
    basis: &SurfaceBasis,
) -> Result<SurfaceGrid> {
    let mut players = Vec::new();
    for (k, m) in game.action_counts().into_iter().enumerate() {
        match m {
            1 => {}
            2 => players.push(k),
            _ => {
                return Err(Error::Domain(format!(
                    "player {k} has {m} actions; the surface needs two-action players"
                )))
            }
        }
    }
    if alphas.iter().chain(betas).any(|v| !v.is_finite()) {
        return Err(Error::Config("grid coordinates must be finite".into()));
    }
    let sol = solve_qre(game, SURFACE_QRE_TOL, 200_000)?;
    if !sol.converged {
        return Err(Error::Domain(format!("QRE solver did not converge (residual {:e})", sol.residual)));
    }
    let n = players.len();
    let (u, v) = match basis {
        SurfaceBasis::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut draw = || loop {
                let r: f64 = rng.random();
                if r > 0.0 {
                    return r;
                }
            };
            let u: Vec<f64> = (0..n).map(|_| draw()).collect();
            let v: Vec<f64> = (0..n).map(|_| draw()).collect();
            (u, v)
        }
        SurfaceBasis::Explicit { u, v } => {
            if u.len() != n || v.len() != n {
                return Err(Error::Shape(format!("basis vectors need {n} entries")));
            }
            if u.iter().chain(v).any(|e| !(*e > 0.0 && *e < 1.0)) {
                return Err(Error::Domain("basis entries must lie in (0, 1)".into()));
            }
            (u.clone(), v.clone())
        }
    };
    let ut: Vec<f64> = u.iter().map(|&p| logit(p)).collect();
    let vt: Vec<f64> = v.iter().map(|&p| logit(p)).collect();
    let q: Vec<f64> = players.iter().map(|&k| sol.profile.player(k)[0]).collect();
    let values = alphas
        .par_iter()
        .map(|&a| {
            betas
                .iter()
                .map(|&b| (0..n).map(|i| binary_kl_logit(q[i], a * ut[i] + b * vt[i])).sum())
                .collect()
        })
        .collect();
    Ok(SurfaceGrid { alphas: alphas.to_vec(), betas: betas.to_vec(), values, u, v, players, qre: sol.profile })
}

/// First-action probabilities of the QRE for every two-action player, the
/// basis direction whose `α = 1, β = 0` point is the QRE itself.
pub fn qre_direction(game: &PolymatrixGame) -> Result<Vec<f64>> {
    let sol = solve_qre(game, SURFACE_QRE_TOL, 200_000)?;
    Ok(game
        .action_counts()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m == 2)
        .map(|(k, _)| sol.profile.player(k)[0])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::generators::make_match_mismatch;
    use crate::lyapunov::kl_divergence;

    fn network(t: f64) -> PolymatrixGame {
        let g = make_match_mismatch(3);
        let temps = vec![t; g.num_players()];
        g.with_temperatures(&temps).unwrap()
    }

    #[test]
    fn binary_kl_matches_direct_formula() {
        for (q, s) in [(0.3, 0.0), (0.9, -2.0), (0.01, 4.0), (0.5, 0.7)] {
            let z = 1.0 / (1.0 + (-s as f64).exp());
            let direct = kl_divergence(&[q, 1.0 - q], &[z, 1.0 - z]).unwrap();
            assert!((binary_kl_logit(q, s) - direct).abs() < 1e-14);
        }
        assert!(binary_kl_logit(0.3, 800.0).is_finite());
        assert!(binary_kl_logit(0.3, -800.0).is_finite());
    }

    #[test]
    fn origin_is_uniform() {
        let g = network(0.3);
        let grid = lyapunov_surface(&g, &[0.0], &[0.0], &SurfaceBasis::Random { seed: 1 }).unwrap();
        let expected: f64 = grid
            .players
            .iter()
            .map(|&k| kl_divergence(grid.qre.player(k), &[0.5, 0.5]).unwrap())
            .sum();
        assert!((grid.values[0][0] - expected).abs() < 1e-14);
    }

    #[test]
    fn qre_direction_hits_zero() {
        let g = network(0.3);
        let u = qre_direction(&g).unwrap();
        let v = vec![0.5; u.len()];
        let grid = lyapunov_surface(&g, &linspace(-3.0, 3.0, 61), &[0.0], &SurfaceBasis::Explicit { u, v }).unwrap();
        assert!(grid.values[40][0] < 1e-14);
        assert!(grid.values.iter().flatten().all(|&x| x >= 0.0));
    }

    #[test]
    fn refuses_three_action_players() {
        let g = crate::experiments::generators::make_rps().with_temperatures(&[1.0, 1.0]).unwrap();
        assert!(lyapunov_surface(&g, &[0.0], &[0.0], &SurfaceBasis::Random { seed: 0 }).is_err());
    }

    #[test]
    fn linspace_endpoints() {
        let xs = linspace(-3.0, 3.0, 61);
        assert_eq!((xs[0], xs[30], xs[40], xs[60]), (-3.0, 0.0, 1.0, 3.0));
    }
}
