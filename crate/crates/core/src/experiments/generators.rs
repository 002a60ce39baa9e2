//! Benchmark games: asymmetric matching pennies, rock-paper-scissors, the
//! match-mismatch line network, and random weighted zero-sum games.

use rand::Rng;

use crate::game::{
    validate_weighted_zero_sum, Matrix, Player, PolymatrixGame, ZeroSumMode,
};

fn m(rows: &[&[f64]]) -> Matrix {
    Matrix::from_rows(rows).expect("static matrix")
}

/// Asymmetric matching pennies exactly as usually printed:
/// `A = [[2, -2], [0, 2]]`, `B = [[4, 0], [-4, -4]]`, weights `(1, 0.5)`.
///
/// These matrices do **not** satisfy `A + 0.5 Bᵀ = 0`; see [`make_amps`].
pub fn printed_amps() -> PolymatrixGame {
    amps_with(m(&[&[4.0, 0.0], &[-4.0, -4.0]]), Vec::new())
}

/// Asymmetric matching pennies as a weighted zero-sum game.
///
/// The printed `B` fails validation; the emitted game uses
/// `B = -2 Aᵀ = [[-4, 0], [4, -4]]` (first column sign-flipped), which makes
/// `A + 0.5 Bᵀ = 0` hold and has the interior Nash equilibrium
/// `((1/3, 2/3), (2/3, 1/3))`. The substitution is recorded in the game notes.
pub fn make_amps() -> PolymatrixGame {
    let printed = printed_amps();
    let report = validate_weighted_zero_sum(&printed, ZeroSumMode::Exhaustive)
        .expect("2x2 game is small");
    if report.passed {
        return printed;
    }
    let note = format!(
        "printed B = [[4,0],[-4,-4]] fails weighted zero-sum validation (residual {}); \
         substituted B = [[-4,0],[4,-4]] = -2·Aᵀ",
        report.max_residual
    );
    amps_with(m(&[&[-4.0, 0.0], &[4.0, -4.0]]), vec![note])
}

/// Nash equilibrium of the validated AMPs game, `(p, q)` as H-probabilities.
pub const AMPS_NASH: ([f64; 2], [f64; 2]) = ([1.0 / 3.0, 2.0 / 3.0], [2.0 / 3.0, 1.0 / 3.0]);

fn amps_with(b: Matrix, notes: Vec<String>) -> PolymatrixGame {
    let a = m(&[&[2.0, -2.0], &[0.0, 2.0]]);
    let mut builder = PolymatrixGame::builder()
        .name("amps")
        .player(Player::new("x", 2).with_action_names(["H", "T"]))
        .player(Player::new("y", 2).with_action_names(["H", "T"]).with_weight(0.5))
        .edge(0, 1, a, b);
    for n in notes {
        builder = builder.note(n);
    }
    builder.build().expect("AMPs is well formed")
}

/// Rock-paper-scissors with `B = -Aᵀ` and unit weights.
pub fn make_rps() -> PolymatrixGame {
    let a = m(&[&[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0], &[-1.0, 1.0, 0.0]]);
    let b = a.transpose().scaled(-1.0);
    PolymatrixGame::builder()
        .name("rps")
        .player(Player::new("x", 3).with_action_names(["R", "P", "S"]))
        .player(Player::new("y", 3).with_action_names(["R", "P", "S"]))
        .edge(0, 1, a, b)
        .build()
        .expect("RPS is well formed")
}

/// The match-mismatch line network with `n` two-action agents.
///
/// Players `0..n` are `p1..pn` with actions `(H, T)`; player `n` is the
/// dummy `d1` (single action H) attached to `p1`, player `n + 1` is the dummy
/// `d2` (single action T) attached to `pn`. Each `p_k` earns +1 for matching
/// `p_{k+1}` and +1 for mismatching `p_{k-1}`, −1 otherwise.
pub fn make_match_mismatch(n: usize) -> PolymatrixGame {
    assert!(n >= 1, "match-mismatch needs at least one agent");
    let a_plus = m(&[&[1.0, -1.0], &[-1.0, 1.0]]);
    let a_minus = a_plus.scaled(-1.0);
    let dummy = m(&[&[1.0, -1.0]]);
    let dummy_against = dummy.transpose().scaled(-1.0);

    let mut builder = PolymatrixGame::builder().name(format!("match-mismatch-{n}"));
    for k in 0..n {
        builder = builder.player(Player::new(format!("p{}", k + 1), 2).with_action_names(["H", "T"]));
    }
    builder = builder
        .player(Player::new("d1", 1).with_action_names(["H"]))
        .player(Player::new("d2", 1).with_action_names(["T"]));
    for k in 0..n.saturating_sub(1) {
        builder = builder.edge(k, k + 1, a_plus.clone(), a_minus.clone());
    }
    builder
        .edge(n, 0, dummy.clone(), dummy_against.clone())
        .edge(n + 1, n - 1, dummy, dummy_against)
        .build()
        .expect("match-mismatch is well formed")
}

/// Parameters of [`random_weighted_zero_sum`].
#[derive(Debug, Clone)]
pub struct RandomGameSpec {
    pub players: usize,
    pub min_actions: usize,
    pub max_actions: usize,
    /// Probability of each non-tree edge.
    pub edge_probability: f64,
    /// Start from a random spanning tree so the graph is connected.
    pub connected: bool,
    pub payoff_scale: f64,
    pub weight_range: (f64, f64),
    pub temperature_range: (f64, f64),
}

impl Default for RandomGameSpec {
    fn default() -> Self {
        Self {
            players: 3,
            min_actions: 2,
            max_actions: 3,
            edge_probability: 0.5,
            connected: true,
            payoff_scale: 1.0,
            weight_range: (0.5, 2.0),
            temperature_range: (0.0, 0.0),
        }
    }
}

/// Random weighted zero-sum polymatrix game.
///
/// For each edge `A_kl` is uniform in `[-scale, scale]` and
/// `A_lk = -(w_k / w_l) A_klᵀ`, so every edge is weighted zero-sum on its own.
pub fn random_weighted_zero_sum<R: Rng + ?Sized>(rng: &mut R, spec: &RandomGameSpec) -> PolymatrixGame {
    let n = spec.players.max(1);
    let sample = |rng: &mut R, (lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..hi) } else { lo };
    let mut builder = PolymatrixGame::builder().name("random-weighted-zero-sum");
    let mut counts = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in 0..n {
        let actions = rng.random_range(spec.min_actions..=spec.max_actions.max(spec.min_actions));
        let w = sample(rng, spec.weight_range);
        let t = sample(rng, spec.temperature_range);
        counts.push(actions);
        weights.push(w);
        builder = builder.player(Player::new(format!("p{k}"), actions).with_weight(w).with_temperature(t));
    }
    let mut adjacent = vec![vec![false; n]; n];
    if spec.connected {
        for k in 1..n {
            let l = rng.random_range(0..k);
            adjacent[k][l] = true;
            adjacent[l][k] = true;
        }
    }
    for k in 0..n {
        for l in k + 1..n {
            if !adjacent[k][l] && rng.random_bool(spec.edge_probability.clamp(0.0, 1.0)) {
                adjacent[k][l] = true;
                adjacent[l][k] = true;
            }
        }
    }
    for k in 0..n {
        for l in k + 1..n {
            if !adjacent[k][l] {
                continue;
            }
            let data = (0..counts[k] * counts[l])
                .map(|_| rng.random_range(-spec.payoff_scale..=spec.payoff_scale))
                .collect();
            let a_kl = Matrix::new(counts[k], counts[l], data).expect("shape");
            let a_lk = a_kl.transpose().scaled(-weights[k] / weights[l]);
            builder = builder.edge(k, l, a_kl, a_lk);
        }
    }
    builder.build().expect("random game is well formed")
}
