//! The `smoothq` command line.
//!
//! Exit status: 0 on success, 1 when a validation, convergence or
//! certification check fails, 2 on usage or input errors.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::analytic::{critical_temperature, rest_point, simulate_rest_point, TwoByTwoGame};
use crate::dynamics::{integrate, IntegratorConfig, Method, Termination};
use crate::error::{Error, Result};
use crate::experiments::{
    anneal_select, batch_run, make_amps, make_match_mismatch, make_rps, printed_amps, qre_grid, BatchConfig,
    ExplorationSchedule, GridAxis,
};
use crate::game::{
    infer_weights, validate_weighted_zero_sum, PolymatrixGame, StrategyProfile, ValidatedGame, ZeroSumMode,
    EXHAUSTIVE_LIMIT,
};
use crate::io::{self, Output};
use crate::lyapunov::certify_trajectory;
use crate::qre::{solve_qre, solve_qre_from, DEFAULT_QRE_MAX_ITERS, DEFAULT_QRE_TOL};
use crate::surface::{linspace, lyapunov_surface, qre_direction, SurfaceBasis};

#[derive(Debug, Parser)]
#[command(name = "smoothq", version, about = "Smooth Q-learning dynamics on weighted zero-sum polymatrix games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the weighted zero-sum property, optionally recovering weights.
    Validate(ValidateArgs),
    /// Integrate the dynamics and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Solve for the quantal response equilibrium.
    SolveQre(SolveQreArgs),
    /// Anneal every exploration rate to zero and report the selected profile.
    Anneal(AnnealArgs),
    /// Summarize final states over independent random starts.
    Batch(BatchArgs),
    /// QRE over a grid of exploration rates.
    Grid(GridArgs),
    /// KL-divergence to the QRE over a two-dimensional slice.
    Surface(SurfaceArgs),
    /// Closed-form rest points of a 2x2 game with one exploring player.
    #[command(name = "analyze-2x2")]
    Analyze2x2(Analyze2x2Args),
}

#[derive(Debug, Args)]
struct GameArgs {
    /// Game file, or builtin:rps, builtin:amps, builtin:amps-printed,
    /// builtin:match-mismatch:N.
    #[arg(long)]
    game: String,
    /// Exploration rates: one value for everyone, one per player, or one per
    /// multi-action player.
    #[arg(long, allow_hyphen_values = true)]
    temps: Option<String>,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output file; `-` for standard output.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
struct IntegrationArgs {
    #[arg(long, default_value = "rk4")]
    method: Method,
    /// Step size; defaults to 3e-4 for Euler and 1e-2 for RK4.
    #[arg(long)]
    step: Option<f64>,
}

impl IntegrationArgs {
    fn config(&self) -> IntegratorConfig {
        let cfg = match self.method {
            Method::Euler => IntegratorConfig::euler(),
            Method::Rk4 => IntegratorConfig::rk4(),
        };
        match self.step {
            Some(h) => cfg.with_step(h),
            None => cfg,
        }
    }
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Check this many random pure profiles instead of all of them.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also search for weights that make the game zero-sum.
    #[arg(long)]
    infer_weights: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Reference {
    /// QRE when every player explores, trajectory time-average otherwise.
    Auto,
    Qre,
    Uniform,
    Average,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    game: GameArgs,
    #[command(flatten)]
    integration: IntegrationArgs,
    /// Number of steps.
    #[arg(long, conflicts_with = "horizon")]
    steps: Option<usize>,
    /// Integration time; the step count is rounded up.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    record_every: Option<usize>,
    /// `uniform`, `random` (Dirichlet, from --seed), or per-player
    /// probabilities `0.2,0.8;0.5,0.5`.
    #[arg(long, default_value = "random")]
    start: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep integrating after the field vanishes.
    #[arg(long)]
    no_early_stop: bool,
    /// Check the KL certificate along the trajectory.
    #[arg(long)]
    certify: bool,
    #[arg(long, value_enum, default_value = "auto")]
    reference: Reference,
    /// Write the certificate table (CSV) here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct SolveQreArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value_t = DEFAULT_QRE_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_QRE_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, default_value = "uniform")]
    start: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Shape {
    Linear,
    Ete,
    Clr1,
}

#[derive(Debug, Args)]
struct AnnealArgs {
    #[arg(long)]
    game: String,
    #[arg(long, value_enum, default_value = "linear")]
    schedule: Shape,
    /// Starting exploration rates (same forms as --temps).
    #[arg(long, default_value = "1")]
    from: String,
    /// Peak rates for clr1.
    #[arg(long, default_value = "2")]
    peak: String,
    #[arg(long, default_value_t = 50.0)]
    horizon: f64,
    #[arg(long, default_value = "random")]
    start: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    integration: IntegrationArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct BatchArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200.0)]
    horizon: f64,
    #[command(flatten)]
    integration: IntegrationArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Player id or index swept on the first axis.
    #[arg(long)]
    player1: String,
    /// Rates on the first axis: `a,b,c` or `lo:hi:n`.
    #[arg(long)]
    t1: String,
    #[arg(long, requires = "t2")]
    player2: Option<String>,
    #[arg(long, requires = "player2")]
    t2: Option<String>,
    #[arg(long, default_value_t = DEFAULT_QRE_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_QRE_MAX_ITERS)]
    max_iters: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Basis {
    Random,
    /// First direction through the QRE, second through the uniform profile.
    Qre,
}

#[derive(Debug, Args)]
struct SurfaceArgs {
    #[command(flatten)]
    game: GameArgs,
    /// `lo:hi:n` or an explicit list.
    #[arg(long, default_value = "-3:3:61", allow_hyphen_values = true)]
    alpha: String,
    #[arg(long, default_value = "-3:3:61", allow_hyphen_values = true)]
    beta: String,
    #[arg(long, value_enum, default_value = "random")]
    basis: Basis,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Metadata (basis, QRE, axes) as JSON; defaults to `<out>.meta.json`,
    /// or standard error when writing to standard output.
    #[arg(long)]
    meta: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct Analyze2x2Args {
    /// Two-player 2x2 game; alternatively give --a and --b.
    #[arg(long, conflicts_with_all = ["a", "b"])]
    game: Option<String>,
    /// Row player's payoffs `a11,a12,a21,a22`.
    #[arg(long, requires = "b", allow_hyphen_values = true)]
    a: Option<String>,
    /// Column player's payoffs `b11,b12,b21,b22`, rows indexed by the row
    /// player's action.
    #[arg(long, requires = "a", allow_hyphen_values = true)]
    b: Option<String>,
    /// Exploration rates of the second player.
    #[arg(long, default_value = "0")]
    ty: String,
    /// Also integrate the reduced system from this start `x,y`.
    #[arg(long)]
    simulate: Option<String>,
    #[arg(long, default_value_t = 2000.0)]
    horizon: f64,
    #[command(flatten)]
    out: OutArgs,
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Validate(a) => validate(a),
        Command::Simulate(a) => simulate(a),
        Command::SolveQre(a) => solve(a),
        Command::Anneal(a) => anneal(a),
        Command::Batch(a) => batch(a),
        Command::Grid(a) => grid(a),
        Command::Surface(a) => surface(a),
        Command::Analyze2x2(a) => analyze(a),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Io(_) | Error::Json(_) | Error::Shape(_) => 2,
        _ => 1,
    }
}

/// Reads a game from a file or a `builtin:` name.
pub fn load_game(spec: &str) -> Result<PolymatrixGame> {
    let Some(name) = spec.strip_prefix("builtin:") else {
        let parsed = io::parse_game_config(spec)?;
        for w in &parsed.warnings {
            eprintln!("warning: {w}");
        }
        return Ok(parsed.game);
    };
    match name {
        "rps" => Ok(make_rps()),
        "amps" => Ok(make_amps()),
        "amps-printed" => Ok(printed_amps()),
        _ => match name.strip_prefix("match-mismatch:").map(str::parse::<usize>) {
            Some(Ok(n)) if n >= 1 => Ok(make_match_mismatch(n)),
            _ => Err(Error::Config(format!("unknown builtin game {name:?}"))),
        },
    }
}

/// Comma-separated numbers, or `lo:hi:n` for evenly spaced points.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse {s:?} as a list of numbers"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        return Ok(linspace(lo, hi, n));
    }
    s.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad())).collect()
}

/// Expands a rate list to one value per player.
fn expand_rates(game: &PolymatrixGame, values: &[f64]) -> Result<Vec<f64>> {
    let n = game.num_players();
    let counts = game.action_counts();
    let active: Vec<usize> = (0..n).filter(|&k| counts[k] > 1).collect();
    if values.len() == 1 {
        Ok(vec![values[0]; n])
    } else if values.len() == n {
        Ok(values.to_vec())
    } else if values.len() == active.len() {
        let mut t = game.temperatures();
        for (&k, &v) in active.iter().zip(values) {
            t[k] = v;
        }
        Ok(t)
    } else {
        Err(Error::Config(format!(
            "got {} rates; expected 1, {n}, or {} (one per multi-action player)",
            values.len(),
            active.len()
        )))
    }
}

fn game_with_temps(args: &GameArgs) -> Result<PolymatrixGame> {
    let game = load_game(&args.game)?;
    match &args.temps {
        Some(t) => {
            let temps = expand_rates(&game, &parse_values(t)?)?;
            game.with_temperatures(&temps)
        }
        None => Ok(game),
    }
}

fn parse_start(game: &PolymatrixGame, s: &str, seed: u64) -> Result<StrategyProfile> {
    match s {
        "uniform" => Ok(game.uniform_profile()),
        "random" => Ok(StrategyProfile::random_dirichlet(&game.action_counts(), &mut ChaCha8Rng::seed_from_u64(seed))),
        _ => {
            let rows = s.split(';').map(parse_values).collect::<Result<Vec<_>>>()?;
            let x = StrategyProfile::new(rows).map_err(|e| Error::Config(format!("--start: {e}")))?;
            game.check_profile(&x).map_err(|e| Error::Config(format!("--start: {e}")))?;
            Ok(x)
        }
    }
}

fn player_index(game: &PolymatrixGame, s: &str) -> Result<usize> {
    game.player_index(s)
        .or_else(|| s.parse::<usize>().ok().filter(|&k| k < game.num_players()))
        .ok_or_else(|| Error::Config(format!("unknown player {s:?}")))
}

fn write_json(out: &OutArgs, default_name: &str, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Output::resolve(out.out.as_deref(), default_name).write(text.as_bytes())
}

fn validate(a: ValidateArgs) -> Result<bool> {
    let game = game_with_temps(&a.game)?;
    let total: f64 = game.action_counts().iter().map(|&m| m as f64).product();
    let mode = match a.samples {
        Some(count) => ZeroSumMode::Sampled { count, seed: a.seed },
        None if total <= EXHAUSTIVE_LIMIT => ZeroSumMode::Exhaustive,
        None => ZeroSumMode::Sampled { count: crate::game::DEFAULT_SAMPLES, seed: a.seed },
    };
    let report = validate_weighted_zero_sum(&game, mode)?;
    let mut ok = report.passed;
    let mut doc = json!({ "game": game.name(), "weights": game.weights(), "zero_sum": report });
    if a.infer_weights {
        let inf = infer_weights(&game)?;
        ok = ok || inf.weights.is_some();
        doc["inferred"] = json!({ "weights": inf.weights, "residual": inf.residual, "degenerate": inf.degenerate });
    }
    if !report.passed {
        eprintln!(
            "not weighted zero-sum: max residual {:e} exceeds {:e}",
            report.max_residual, report.tolerance
        );
    }
    write_json(&a.out, "validate.json", &doc)?;
    Ok(ok)
}

fn simulate(a: SimulateArgs) -> Result<bool> {
    let game = game_with_temps(&a.game)?;
    let x0 = parse_start(&game, &a.start, a.seed)?;
    let mut cfg = a.integration.config();
    if let Some(steps) = a.steps {
        cfg = cfg.with_max_steps(steps);
    }
    if let Some(h) = a.horizon {
        cfg = cfg.with_horizon(h);
    }
    if let Some(r) = a.record_every {
        cfg = cfg.with_record_every(r);
    }
    if a.no_early_stop {
        cfg = cfg.with_stop_tolerance(None);
    }
    let mut traj = integrate(&game, &x0, &cfg, None)?;
    let mut ok = !matches!(traj.termination, Termination::Diverged { .. });
    if !ok {
        eprintln!("integration diverged: {:?}", traj.termination);
    }
    if traj.clamped() {
        eprintln!("warning: {} step(s) hit the interior floor", traj.clamp_events);
    }
    if a.certify {
        let validated = ValidatedGame::new(game.clone())?;
        let reference = match (a.reference, game.fully_exploratory()) {
            (Reference::Uniform, _) => game.uniform_profile(),
            (Reference::Average, _) | (Reference::Auto, false) => traj.time_average(),
            (Reference::Qre, _) | (Reference::Auto, true) => solve_qre(&game, 1e-12, DEFAULT_QRE_MAX_ITERS)?.profile,
        };
        let report = certify_trajectory(&validated, &traj, &reference)?;
        traj.diagnostics.push(("phi".into(), report.phi.clone()));
        if let Some(path) = &a.report {
            let mut buf = Vec::new();
            io::write_lyapunov_csv(&report, &mut buf)?;
            Output::File(path.clone()).write(&buf)?;
        }
        eprintln!("{}", serde_json::to_string_pretty(&io::lyapunov_summary_json(&report))?);
        if !report.passed() {
            eprintln!("certificate failed");
        }
        ok &= report.passed();
    }
    let mut buf = Vec::new();
    io::write_trajectory_csv(&game, &traj, &mut buf)?;
    Output::resolve(a.out.out.as_deref(), "trajectory.csv").write(&buf)?;
    Ok(ok)
}

fn solve(a: SolveQreArgs) -> Result<bool> {
    let game = game_with_temps(&a.game)?;
    let x0 = parse_start(&game, &a.start, a.seed)?;
    let sol = solve_qre_from(&game, &x0, a.tol, a.max_iters)?;
    if !sol.converged {
        eprintln!("QRE solver did not converge (residual {:e})", sol.residual);
    }
    write_json(&a.out, "qre.json", &io::qre_json(&game, &sol))?;
    Ok(sol.converged)
}

fn anneal(a: AnnealArgs) -> Result<bool> {
    let game = load_game(&a.game)?;
    let start = expand_rates(&game, &parse_values(&a.from)?)?;
    let end = vec![0.0; game.num_players()];
    let schedule = match a.schedule {
        Shape::Linear => ExplorationSchedule::linear(start, end, a.horizon)?,
        Shape::Ete => ExplorationSchedule::ete(start, end, a.horizon)?,
        Shape::Clr1 => {
            let peak = expand_rates(&game, &parse_values(&a.peak)?)?;
            ExplorationSchedule::clr1(start, peak, end, a.horizon)?
        }
    };
    let x0 = parse_start(&game, &a.start, a.seed)?;
    let outcome = anneal_select(&game, &schedule, &x0, &a.integration.config())?;
    let mut profile = serde_json::Map::new();
    for (p, x) in game.players().iter().zip(outcome.final_profile.players()) {
        profile.insert(p.id.clone(), json!(x));
    }
    let doc = json!({
        "schedule": schedule,
        "profile": profile,
        "exploitability": outcome.exploitability,
        "selected": outcome.selected,
        "tail_settled": outcome.tail_settled,
    });
    write_json(&a.out, "anneal.json", &doc)?;
    Ok(outcome.selected)
}

fn batch(a: BatchArgs) -> Result<bool> {
    let game = game_with_temps(&a.game)?;
    let cfg = BatchConfig {
        runs: a.runs,
        seed: a.seed,
        integrator: a.integration.config().with_horizon(a.horizon),
        schedule: None,
    };
    let summary = batch_run(&game, &cfg)?;
    write_json(&a.out, "batch.json", &serde_json::to_value(&summary)?)?;
    Ok(true)
}

fn grid(a: GridArgs) -> Result<bool> {
    let game = game_with_temps(&a.game)?;
    let axis1 = GridAxis { player: player_index(&game, &a.player1)?, values: parse_values(&a.t1)? };
    let axis2 = match (&a.player2, &a.t2) {
        (Some(p), Some(t)) => Some(GridAxis { player: player_index(&game, p)?, values: parse_values(t)? }),
        _ => None,
    };
    let nodes = qre_grid(&game, &axis1, axis2.as_ref(), a.tol, a.max_iters)?;
    for n in nodes.iter().filter(|n| n.flag.is_some()) {
        let t2 = n.t2.map(|t| format!(" T2={t}")).unwrap_or_default();
        eprintln!("T1={}{t2}: {}", n.t1, n.flag.as_deref().unwrap_or_default());
    }
    let mut buf = Vec::new();
    io::write_grid_csv(&game, &nodes, &mut buf)?;
    Output::resolve(a.out.out.as_deref(), "grid.csv").write(&buf)?;
    Ok(nodes.iter().all(|n| n.converged || n.profile.is_none()))
}

fn surface(a: SurfaceArgs) -> Result<bool> {
    let game = game_with_temps(&a.game)?;
    let alphas = parse_values(&a.alpha)?;
    let betas = parse_values(&a.beta)?;
    let basis = match a.basis {
        Basis::Random => SurfaceBasis::Random { seed: a.seed },
        Basis::Qre => {
            let u = qre_direction(&game)?;
            let v = vec![0.5; u.len()];
            SurfaceBasis::Explicit { u, v }
        }
    };
    let grid = lyapunov_surface(&game, &alphas, &betas, &basis)?;
    let out = Output::resolve(a.out.out.as_deref(), "surface.csv");
    let mut buf = Vec::new();
    io::write_surface_csv(&grid, &mut buf)?;
    out.write(&buf)?;
    let ids: Vec<&str> = grid.players.iter().map(|&k| game.player(k).id.as_str()).collect();
    let meta = json!({
        "alpha": [alphas.first(), alphas.last(), alphas.len()],
        "beta": [betas.first(), betas.last(), betas.len()],
        "seed": a.seed,
        "players": ids,
        "u": grid.u,
        "v": grid.v,
        "qre": serde_json::to_value(&grid)?["qre"],
        "min": grid.min(),
    });
    let text = serde_json::to_string_pretty(&meta)? + "\n";
    match (&a.meta, &out) {
        (Some(path), _) => Output::File(path.clone()).write(text.as_bytes())?,
        (None, Output::File(path)) => {
            let mut p = path.clone().into_os_string();
            p.push(".meta.json");
            Output::File(p.into()).write(text.as_bytes())?
        }
        (None, Output::Stdout) => eprint!("{text}"),
    }
    Ok(grid.values.iter().flatten().all(|v| v.is_finite() && *v >= 0.0))
}

fn matrix2(s: &str) -> Result<[[f64; 2]; 2]> {
    match parse_values(s)?.as_slice() {
        &[a, b, c, d] => Ok([[a, b], [c, d]]),
        _ => Err(Error::Config(format!("expected four payoffs, got {s:?}"))),
    }
}

fn analyze(a: Analyze2x2Args) -> Result<bool> {
    let g = match (&a.game, &a.a, &a.b) {
        (Some(spec), _, _) => TwoByTwoGame::from_game(&load_game(spec)?)?,
        (None, Some(ma), Some(mb)) => TwoByTwoGame::new(matrix2(ma)?, matrix2(mb)?)?,
        _ => return Err(Error::Config("give --game or both --a and --b".into())),
    };
    let start = match &a.simulate {
        Some(s) => match parse_values(s)?.as_slice() {
            &[x, y] => Some((x, y)),
            _ => return Err(Error::Config("--simulate expects x,y".into())),
        },
        None => None,
    };
    let mut rows = Vec::new();
    for t_y in parse_values(&a.ty)? {
        let pred = rest_point(&g, t_y)?;
        let mut row = json!({ "t_y": t_y, "regime": pred.regime, "point": pred.point });
        if let (Some(s), true) = (start, t_y > 0.0) {
            row["simulated"] = serde_json::to_value(simulate_rest_point(&g, t_y, s, a.horizon)?)?;
        }
        rows.push(row);
    }
    let t_crit = critical_temperature(&g);
    let (a1, a2, b1, b2) = g.coefficients();
    let doc = json!({
        "a": g.a,
        "b": g.b,
        "coefficients": [a1, a2, b1, b2],
        "nash": g.nash(),
        "t_crit": if t_crit.is_finite() { json!(t_crit) } else { json!("inf") },
        "predictions": rows,
    });
    write_json(&a.out, "analyze-2x2.json", &doc)?;
    Ok(true)
}
