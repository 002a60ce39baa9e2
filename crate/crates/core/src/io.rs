//! Game configuration files and CSV/JSON export.
//!
//! Game files are JSON:
//!
//! ```json
//! {
//!   "name": "rps",
//!   "players": [
//!     {"id": "x", "actions": ["R", "P", "S"], "weight": 1.0, "temperature": 0.1},
//!     {"id": "y", "actions": 3}
//!   ],
//!   "edges": [
//!     {"from": "x", "to": "y", "matrix": [[0, -1, 1], [1, 0, -1], [-1, 1, 0]]},
//!     {"from": "y", "to": "x", "matrix": [[0, -1, 1], [1, 0, -1], [-1, 1, 0]]}
//!   ]
//! }
//! ```
//!
//! `actions` is a count or a list of names. `weight` defaults to 1 (with a
//! warning) and `temperature` to 0. Edge endpoints are ids or indices. Every
//! edge needs its reverse.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serializer;
use serde_json::{json, Map, Value};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::experiments::GridNode;
use crate::game::{Matrix, Player, PolymatrixGame, StrategyProfile};
use crate::lyapunov::LyapunovReport;
use crate::qre::QreSolution;
use crate::surface::SurfaceGrid;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SMOOTHQ_OUT_DIR";

/// A parsed game and the warnings raised while reading it.
#[derive(Debug, Clone)]
pub struct ParsedGame {
    pub game: PolymatrixGame,
    pub warnings: Vec<String>,
}

pub fn parse_game_config(path: impl AsRef<Path>) -> Result<ParsedGame> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_game_str(&text).map_err(|e| match e {
        Error::Parse { path: field, message } => Error::Parse { path: format!("{}: {field}", path.display()), message },
        other => other,
    })
}

fn perr(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { path: path.into(), message: message.into() }
}

pub fn parse_game_str(text: &str) -> Result<ParsedGame> {
    let root: Value = serde_json::from_str(text).map_err(|e| perr("$", e.to_string()))?;
    let obj = root.as_object().ok_or_else(|| perr("$", "expected an object"))?;
    let mut warnings = Vec::new();
    let mut builder = PolymatrixGame::builder();
    if let Some(name) = obj.get("name") {
        builder = builder.name(name.as_str().ok_or_else(|| perr("name", "expected a string"))?);
    }
    if let Some(notes) = obj.get("notes") {
        for (i, n) in notes.as_array().ok_or_else(|| perr("notes", "expected an array"))?.iter().enumerate() {
            builder = builder.note(n.as_str().ok_or_else(|| perr(format!("notes[{i}]"), "expected a string"))?);
        }
    }
    let players = obj
        .get("players")
        .ok_or_else(|| perr("players", "missing"))?
        .as_array()
        .ok_or_else(|| perr("players", "expected an array"))?;
    let mut ids = Vec::new();
    for (k, p) in players.iter().enumerate() {
        let at = |field: &str| format!("players[{k}].{field}");
        let p = p.as_object().ok_or_else(|| perr(format!("players[{k}]"), "expected an object"))?;
        let id = match p.get("id") {
            Some(v) => v.as_str().ok_or_else(|| perr(at("id"), "expected a string"))?.to_string(),
            None => format!("p{k}"),
        };
        let mut player = match p.get("actions").ok_or_else(|| perr(at("actions"), "missing"))? {
            Value::Number(n) => {
                let m = n.as_u64().filter(|&m| m >= 1).ok_or_else(|| perr(at("actions"), "expected a positive count"))?;
                Player::new(id.clone(), m as usize)
            }
            Value::Array(names) => {
                let names: Vec<String> = names
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v.as_str().map(String::from).ok_or_else(|| perr(format!("players[{k}].actions[{i}]"), "expected a string")))
                    .collect::<Result<_>>()?;
                if names.is_empty() {
                    return Err(perr(at("actions"), "needs at least one action"));
                }
                Player::new(id.clone(), names.len()).with_action_names(names)
            }
            _ => return Err(perr(at("actions"), "expected a count or a list of names")),
        };
        match p.get("weight") {
            Some(v) => {
                let w = v.as_f64().ok_or_else(|| perr(at("weight"), "expected a number"))?;
                if !(w > 0.0 && w.is_finite()) {
                    return Err(perr(at("weight"), format!("must be positive, got {w}")));
                }
                player = player.with_weight(w);
            }
            None => {
                let msg = format!("player {id:?} has no weight; using 1");
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
        if let Some(v) = p.get("temperature") {
            let t = v.as_f64().ok_or_else(|| perr(at("temperature"), "expected a number"))?;
            if !(t >= 0.0 && t.is_finite()) {
                return Err(perr(at("temperature"), format!("must be nonnegative, got {t}")));
            }
            player = player.with_temperature(t);
        }
        ids.push(id);
        builder = builder.player(player);
    }
    let counts: Vec<usize> = players
        .iter()
        .map(|p| match &p["actions"] {
            Value::Number(n) => n.as_u64().unwrap_or(0) as usize,
            Value::Array(a) => a.len(),
            _ => 0,
        })
        .collect();
    let edges = match obj.get("edges") {
        Some(v) => v.as_array().ok_or_else(|| perr("edges", "expected an array"))?.clone(),
        None => Vec::new(),
    };
    for (e, edge) in edges.iter().enumerate() {
        let at = |field: &str| format!("edges[{e}].{field}");
        let edge = edge.as_object().ok_or_else(|| perr(format!("edges[{e}]"), "expected an object"))?;
        let endpoint = |field: &str| -> Result<usize> {
            match edge.get(field).ok_or_else(|| perr(at(field), "missing"))? {
                Value::String(s) => ids.iter().position(|i| i == s).ok_or_else(|| perr(at(field), format!("unknown player {s:?}"))),
                Value::Number(n) => n
                    .as_u64()
                    .map(|v| v as usize)
                    .filter(|&v| v < ids.len())
                    .ok_or_else(|| perr(at(field), "player index out of range")),
                _ => Err(perr(at(field), "expected a player id or index")),
            }
        };
        let (from, to) = (endpoint("from")?, endpoint("to")?);
        let rows = edge
            .get("matrix")
            .ok_or_else(|| perr(at("matrix"), "missing"))?
            .as_array()
            .ok_or_else(|| perr(at("matrix"), "expected an array of rows"))?;
        let label = format!("edge {} -> {}", ids[from], ids[to]);
        if rows.len() != counts[from] {
            return Err(perr(at("matrix"), format!("{label}: expected {} rows, got {}", counts[from], rows.len())));
        }
        let mut data = Vec::with_capacity(counts[from] * counts[to]);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_array().ok_or_else(|| perr(format!("edges[{e}].matrix[{i}]"), "expected an array"))?;
            if row.len() != counts[to] {
                return Err(perr(
                    format!("edges[{e}].matrix[{i}]"),
                    format!("{label}: row has {} entries, expected {}", row.len(), counts[to]),
                ));
            }
            for (j, v) in row.iter().enumerate() {
                data.push(v.as_f64().ok_or_else(|| perr(format!("edges[{e}].matrix[{i}][{j}]"), "expected a number"))?);
            }
        }
        let m = Matrix::new(counts[from], counts[to], data).map_err(|err| perr(at("matrix"), err.to_string()))?;
        builder = builder.directed_edge(from, to, m);
    }
    let game = builder.build()?;
    Ok(ParsedGame { game, warnings })
}

/// JSON document that [`parse_game_str`] reads back to the same game.
pub fn game_to_json(game: &PolymatrixGame) -> Value {
    let players: Vec<Value> = game
        .players()
        .iter()
        .map(|p| json!({"id": p.id, "actions": p.actions, "weight": p.weight, "temperature": p.temperature}))
        .collect();
    let edges: Vec<Value> = game
        .edges()
        .iter()
        .map(|e| json!({"from": game.player(e.from).id, "to": game.player(e.to).id, "matrix": e.payoff.to_rows()}))
        .collect();
    let mut obj = Map::new();
    obj.insert("name".into(), json!(game.name()));
    if !game.notes().is_empty() {
        obj.insert("notes".into(), json!(game.notes()));
    }
    obj.insert("players".into(), Value::Array(players));
    obj.insert("edges".into(), Value::Array(edges));
    Value::Object(obj)
}

pub fn serialize_profile<S: Serializer>(p: &StrategyProfile, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(p.players())
}

pub fn serialize_optional_profile<S: Serializer>(
    p: &Option<StrategyProfile>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match p {
        Some(p) => serialize_profile(p, s),
        None => s.serialize_none(),
    }
}

/// QRE as JSON: per-player probabilities keyed by id, residual, method and
/// iteration count.
pub fn qre_json(game: &PolymatrixGame, sol: &QreSolution) -> Value {
    let mut profile = Map::new();
    for (p, x) in game.players().iter().zip(sol.profile.players()) {
        profile.insert(p.id.clone(), json!(x));
    }
    json!({
        "profile": profile,
        "residual": sol.residual,
        "method": sol.method,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "local": sol.local,
        "temperatures": game.temperatures(),
    })
}

/// Long-format trajectory CSV: `t,player,action,prob` and one column per
/// diagnostic channel.
pub fn write_trajectory_csv(game: &PolymatrixGame, traj: &Trajectory, mut w: impl Write) -> Result<()> {
    write!(w, "t,player,action,prob")?;
    for (name, _) in &traj.diagnostics {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for (i, (t, x)) in traj.times.iter().zip(&traj.states).enumerate() {
        for (p, s) in game.players().iter().zip(x.players()) {
            for (a, prob) in p.actions.iter().zip(s) {
                write!(w, "{t},{},{a},{prob}", p.id)?;
                for (_, values) in &traj.diagnostics {
                    write!(w, ",{}", values[i])?;
                }
                writeln!(w)?;
            }
        }
    }
    Ok(())
}

/// `t,phi,formula_deriv,fd_deriv,rate_bound`; the bound is empty when it
/// does not apply.
pub fn write_lyapunov_csv(report: &LyapunovReport, mut w: impl Write) -> Result<()> {
    writeln!(w, "t,phi,formula_deriv,fd_deriv,rate_bound")?;
    for i in 0..report.times.len() {
        let bound = report.rate_bound.get(i).map(|b| b.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{bound}",
            report.times[i], report.phi[i], report.formula_derivative[i], report.fd_derivative[i]
        )?;
    }
    Ok(())
}

pub fn lyapunov_summary_json(report: &LyapunovReport) -> Value {
    json!({
        "passed": report.passed(),
        "monotone": report.monotone,
        "max_increase": report.max_increase,
        "rate_bound_holds": report.rate_bound_holds,
        "max_rate_excess": report.max_rate_excess,
        "derivative_agrees": report.derivative_agrees,
        "max_derivative_error": report.max_derivative_error,
        "phi_initial": report.phi.first(),
        "phi_final": report.phi.last(),
        "warnings": report.warnings,
    })
}

/// `alpha,beta,kl`.
pub fn write_surface_csv(grid: &SurfaceGrid, mut w: impl Write) -> Result<()> {
    writeln!(w, "alpha,beta,kl")?;
    for (a, b, v) in grid.rows() {
        writeln!(w, "{a},{b},{v}")?;
    }
    Ok(())
}

/// `T1,T2,player,action,prob`; `T2` is empty on one-axis grids and skipped
/// nodes contribute no rows.
pub fn write_grid_csv(game: &PolymatrixGame, nodes: &[GridNode], mut w: impl Write) -> Result<()> {
    writeln!(w, "T1,T2,player,action,prob")?;
    for n in nodes {
        let Some(profile) = &n.profile else { continue };
        let t2 = n.t2.map(|t| t.to_string()).unwrap_or_default();
        for (p, s) in game.players().iter().zip(profile.players()) {
            for (a, prob) in p.actions.iter().zip(s) {
                writeln!(w, "{},{t2},{},{a},{prob}", n.t1, p.id)?;
            }
        }
    }
    Ok(())
}

/// Where a command writes its main output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Output {
    Stdout,
    File(PathBuf),
}

impl Output {
    /// `-` is standard output. Without an argument, files go to
    /// `$SMOOTHQ_OUT_DIR/<default_name>` when that variable is set, and to
    /// standard output otherwise.
    pub fn resolve(arg: Option<&str>, default_name: &str) -> Self {
        match arg {
            Some("-") => Self::Stdout,
            Some(path) => Self::File(PathBuf::from(path)),
            None => match std::env::var_os(OUT_DIR_ENV) {
                Some(dir) if !dir.is_empty() => Self::File(Path::new(&dir).join(default_name)),
                _ => Self::Stdout,
            },
        }
    }

    pub fn write(&self, contents: &[u8]) -> Result<()> {
        match self {
            Self::Stdout => {
                let mut out = std::io::stdout().lock();
                out.write_all(contents)?;
                out.flush()?;
            }
            Self::File(path) => {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir)?;
                }
                fs::write(path, contents)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::generators::{make_amps, make_match_mismatch, make_rps};

    fn same_game(a: &PolymatrixGame, b: &PolymatrixGame) {
        assert_eq!(a.players(), b.players());
        assert_eq!(a.edges(), b.edges());
        assert_eq!(a.name(), b.name());
    }

    #[test]
    fn round_trip() {
        for g in [make_rps(), make_amps(), make_match_mismatch(4)] {
            let text = serde_json::to_string(&game_to_json(&g)).unwrap();
            let parsed = parse_game_str(&text).unwrap();
            same_game(&g, &parsed.game);
            assert!(parsed.warnings.is_empty());
        }
    }

    #[test]
    fn missing_weight_defaults_with_warning() {
        let text = r#"{"players": [{"id": "a", "actions": 2}, {"id": "b", "actions": 2, "weight": 2}],
                       "edges": [{"from": "a", "to": "b", "matrix": [[1, 0], [0, 1]]},
                                 {"from": 1, "to": 0, "matrix": [[-0.5, 0], [0, -0.5]]}]}"#;
        let parsed = parse_game_str(text).unwrap();
        assert_eq!(parsed.game.weights(), vec![1.0, 2.0]);
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn errors_name_the_field() {
        let short_row = r#"{"players": [{"id": "a", "actions": 2}, {"id": "b", "actions": 2}],
                            "edges": [{"from": "a", "to": "b", "matrix": [[1, 0], [0]]},
                                      {"from": "b", "to": "a", "matrix": [[1, 0], [0, 1]]}]}"#;
        let err = parse_game_str(short_row).unwrap_err().to_string();
        assert!(err.contains("edges[0].matrix[1]") && err.contains("edge a -> b"), "{err}");

        let bad_weight = r#"{"players": [{"id": "a", "actions": 2, "weight": -1}]}"#;
        assert!(parse_game_str(bad_weight).unwrap_err().to_string().contains("players[0].weight"));

        let unknown = r#"{"players": [{"id": "a", "actions": 1}], "edges": [{"from": "a", "to": "zz", "matrix": [[1]]}]}"#;
        assert!(parse_game_str(unknown).unwrap_err().to_string().contains("edges[0].to"));
        assert!(parse_game_str("[1, 2]").is_err());
    }

    #[test]
    fn output_resolution() {
        assert_eq!(Output::resolve(Some("-"), "x.csv"), Output::Stdout);
        assert_eq!(Output::resolve(Some("a/b.csv"), "x.csv"), Output::File("a/b.csv".into()));
    }
}
