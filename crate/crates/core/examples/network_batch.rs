//! Spread of final states on the seven-agent match-mismatch line under
//! full, no, and partial exploration.

use smoothq::dynamics::IntegratorConfig;
use smoothq::experiments::{batch_run, make_match_mismatch, BatchConfig};

fn main() -> smoothq::Result<()> {
    let g = make_match_mismatch(7);
    let cfg = BatchConfig { runs: 20, seed: 7, integrator: IntegratorConfig::rk4().with_horizon(300.0), schedule: None };
    let mut partial = vec![0.0; 9];
    partial[..3].fill(0.1);
    for (name, temps) in [("all", vec![0.1; 9]), ("none", vec![0.0; 9]), ("p1-p3", partial)] {
        let summary = batch_run(&g.with_temperatures(&temps)?, &cfg)?;
        let line: Vec<String> = summary.players[..7]
            .iter()
            .map(|p| format!("{}={:.3}±{:.3}", p.id, p.probabilities[0].mean, p.probabilities[0].std))
            .collect();
        println!("{name:>6}: {}", line.join(" "));
    }
    Ok(())
}
