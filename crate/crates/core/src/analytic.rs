//! 2×2 games in which only the second player explores (`T_x = 0`, `T_y ≥ 0`).
//!
//! With `x`, `y` the probabilities of each player's first action, the dynamics
//! reduce to
//!
//! ```text
//! ẋ = x(1 − x)(a1 − a2 y)
//! ẏ = y(1 − y)(b1 − b2 x + T_y ln(1/y − 1))
//! ```
//!
//! where `a1 = a12 − a22`, `a2 = a12 + a21 − a11 − a22`, `b1 = b12 − b22`,
//! `b2 = b12 + b21 − b11 − b22`. Both matrices are indexed
//! `[own action][opponent action]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Matrix, Player, PolymatrixGame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoByTwoGame {
    pub a: [[f64; 2]; 2],
    pub b: [[f64; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Cyclic,
    Interior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestPointPrediction {
    pub regime: Regime,
    /// `(x, y)`; `None` in the cyclic regime.
    pub point: Option<(f64, f64)>,
    pub t_crit: f64,
}

impl TwoByTwoGame {
    /// Requires a unique interior Nash equilibrium: `a11 > a21`, `a12 < a22`,
    /// `b11 < b21`, `b12 > b22`.
    pub fn new(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> Result<Self> {
        if a.iter().chain(&b).flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGame("payoffs must be finite".into()));
        }
        let g = Self { a, b };
        let (a1, a2, b1, b2) = g.coefficients();
        if !(a1 < 0.0 && a2 < a1 && b1 > 0.0 && b2 > b1) {
            return Err(Error::InvalidGame(format!(
                "2x2 game has no interior equilibrium of the required form \
                 (a1 = {a1}, a2 = {a2}, b1 = {b1}, b2 = {b2})"
            )));
        }
        Ok(g)
    }

    /// Reads the two payoff matrices of a two-player game with two actions each.
    pub fn from_game(game: &PolymatrixGame) -> Result<Self> {
        if game.action_counts() != [2, 2] || game.edges().len() != 2 {
            return Err(Error::Shape("expected two players with two actions joined by one edge".into()));
        }
        let get = |k: usize| {
            let m = &game.edges_from(k).next().expect("edge present").payoff;
            [[m.get(0, 0), m.get(0, 1)], [m.get(1, 0), m.get(1, 1)]]
        };
        Self::new(get(0), get(1))
    }

    /// `(a1, a2, b1, b2)`.
    pub fn coefficients(&self) -> (f64, f64, f64, f64) {
        let (a, b) = (&self.a, &self.b);
        (
            a[0][1] - a[1][1],
            a[0][1] + a[1][0] - a[0][0] - a[1][1],
            b[0][1] - b[1][1],
            b[0][1] + b[1][0] - b[0][0] - b[1][1],
        )
    }

    /// The interior Nash equilibrium `(b1/b2, a1/a2)`.
    pub fn nash(&self) -> (f64, f64) {
        let (a1, a2, b1, b2) = self.coefficients();
        (b1 / b2, a1 / a2)
    }

    /// Polymatrix form with exploration rates `(t_x, t_y)` and unit weights.
    pub fn to_game(&self, t_x: f64, t_y: f64) -> Result<PolymatrixGame> {
        let m = |v: &[[f64; 2]; 2]| Matrix::from_rows(&[&v[0], &v[1]]);
        PolymatrixGame::builder()
            .name("2x2")
            .player(Player::new("x", 2).with_temperature(t_x))
            .player(Player::new("y", 2).with_temperature(t_y))
            .edge(0, 1, m(&self.a)?, m(&self.b)?)
            .build()
    }

    fn ratio(&self) -> f64 {
        let (a1, a2, _, _) = self.coefficients();
        a2 / a1
    }
}

/// Exploration rate of the second player at which the first player's rest
/// point reaches the boundary.
///
/// With `ρ = a2/a1 > 1`: `(b2 − b1) / ln(ρ − 1)` when `ρ > 2` (the boundary is
/// `x = 1`), `−b1 / ln(ρ − 1)` when `ρ < 2` (the boundary is `x = 0`), and
/// `+∞` when `ρ = 2`.
pub fn critical_temperature(g: &TwoByTwoGame) -> f64 {
    let (_, _, b1, b2) = g.coefficients();
    let rho = g.ratio();
    let l = (rho - 1.0).ln();
    if l > 0.0 {
        (b2 - b1) / l
    } else if l < 0.0 {
        -b1 / l
    } else {
        f64::INFINITY
    }
}

/// Predicted long-run rest point for interior starts.
///
/// `T_y = 0` is cyclic. Below the critical rate the rest point is interior
/// with `y = a1/a2`; at or above it the first player is pure.
pub fn rest_point(g: &TwoByTwoGame, t_y: f64) -> Result<RestPointPrediction> {
    if !(t_y >= 0.0 && t_y.is_finite()) {
        return Err(Error::Domain(format!("exploration rate must be finite and nonnegative, got {t_y}")));
    }
    let (a1, a2, b1, b2) = g.coefficients();
    let t_crit = critical_temperature(g);
    if t_y == 0.0 {
        return Ok(RestPointPrediction { regime: Regime::Cyclic, point: None, t_crit });
    }
    if t_y < t_crit {
        let x = (b1 + t_y * (g.ratio() - 1.0).ln()) / b2;
        return Ok(RestPointPrediction { regime: Regime::Interior, point: Some((x, a1 / a2)), t_crit });
    }
    let point = if g.ratio() > 2.0 {
        (1.0, 1.0 / (1.0 + ((b2 - b1) / t_y).exp()))
    } else {
        (0.0, 1.0 / (1.0 + (-b1 / t_y).exp()))
    };
    Ok(RestPointPrediction { regime: Regime::Boundary, point: Some(point), t_crit })
}

/// `(ẋ, ẏ)` of the reduced system. Coordinates are clamped to
/// `[1e-12, 1 − 1e-12]` before the logarithm.
pub fn reduced_vector_field(g: &TwoByTwoGame, x: f64, y: f64, t_y: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("(x, y) = ({x}, {y}) is outside the unit square")));
    }
    let (a1, a2, b1, b2) = g.coefficients();
    let yc = y.clamp(1e-12, 1.0 - 1e-12);
    let entropy = if t_y > 0.0 { t_y * (1.0 / yc - 1.0).ln() } else { 0.0 };
    Ok((x * (1.0 - x) * (a1 - a2 * y), y * (1.0 - y) * (b1 - b2 * x + entropy)))
}

/// Long-run state of the reduced system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulatedRestPoint {
    pub x: f64,
    pub y: f64,
    /// Logit of `x` at the end of the run; grows without bound when the
    /// first player is driven to a pure strategy.
    pub logit_x: f64,
    pub time: f64,
    pub reached_boundary: bool,
    pub settled: bool,
}

const BOUNDARY_LOGIT: f64 = 30.0;

/// Integrates the reduced system in logit coordinates `u = ln(x/(1−x))`,
/// `v = ln(y/(1−y))`, where it reads `u̇ = a1 − a2 y`, `v̇ = b1 − b2 x − T_y v`.
///
/// Stops when `|u|` exceeds 30 (the first player is pure to within 1e-13)
/// and the first player's drift at the limiting `y` points outward,
/// when the logit-space field falls below `1e-13`, or at `horizon`.
pub fn simulate_rest_point(
    g: &TwoByTwoGame,
    t_y: f64,
    start: (f64, f64),
    horizon: f64,
) -> Result<SimulatedRestPoint> {
    let (x0, y0) = start;
    if !(x0 > 0.0 && x0 < 1.0 && y0 > 0.0 && y0 < 1.0) {
        return Err(Error::Domain("start must be interior".into()));
    }
    if !(t_y > 0.0) {
        return Err(Error::Domain("simulation needs a positive exploration rate".into()));
    }
    let (a1, a2, b1, b2) = g.coefficients();
    let sigmoid = |z: f64| 1.0 / (1.0 + (-z).exp());
    let field = |u: f64, v: f64| (a1 - a2 * sigmoid(v), b1 - b2 * sigmoid(u) - t_y * v);
    let scale = a2.abs() + b2.abs() + t_y;
    let h = (0.2 / scale).min(0.05).min(0.5 / t_y);
    // with x pure, v relaxes to its limit; the boundary holds only if u
    // keeps moving outward there
    let absorbed = |u: f64| {
        let v_inf = (b1 - b2 * if u > 0.0 { 1.0 } else { 0.0 }) / t_y;
        (a1 - a2 * sigmoid(v_inf)) * u > 0.0
    };
    let (mut u, mut v) = ((x0 / (1.0 - x0)).ln(), (y0 / (1.0 - y0)).ln());
    let mut t = 0.0;
    let mut settled = false;
    while t < horizon {
        let k1 = field(u, v);
        if k1.0.abs().max(k1.1.abs()) < 1e-13 {
            settled = true;
            break;
        }
        if u.abs() > BOUNDARY_LOGIT && absorbed(u) {
            break;
        }
        let k2 = field(u + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
        let k3 = field(u + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
        let k4 = field(u + h * k3.0, v + h * k3.1);
        u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        t += h;
    }
    let reached_boundary = u.abs() > BOUNDARY_LOGIT && absorbed(u);
    if reached_boundary {
        // x is pure; y follows its own one-dimensional flow from here
        let xb = if u > 0.0 { 1.0 } else { 0.0 };
        let target = (b1 - b2 * xb) / t_y;
        v = target + (v - target) * (-t_y * (horizon - t).max(0.0)).exp();
        settled = true;
    }
    Ok(SimulatedRestPoint { x: sigmoid(u), y: sigmoid(v), logit_x: u, time: t, reached_boundary, settled })
}

/// Bisects for the smallest exploration rate at which simulation from
/// `start` drives the first player to a pure strategy. Searches `[lo, hi]`,
/// which must bracket the switch, to absolute width `tol`.
pub fn empirical_critical_temperature(
    g: &TwoByTwoGame,
    start: (f64, f64),
    (mut lo, mut hi): (f64, f64),
    tol: f64,
    horizon: f64,
) -> Result<f64> {
    let hits = |t: f64| simulate_rest_point(g, t, start, horizon).map(|s| s.reached_boundary);
    if hits(lo)? || !hits(hi)? {
        return Err(Error::Domain(format!("[{lo}, {hi}] does not bracket the boundary transition")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if hits(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
