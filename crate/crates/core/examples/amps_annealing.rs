//! Anneals asymmetric matching pennies to its Nash equilibrium with three
//! schedule shapes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smoothq::dynamics::IntegratorConfig;
use smoothq::experiments::{anneal_select, make_amps, ExplorationSchedule};
use smoothq::StrategyProfile;

fn main() -> smoothq::Result<()> {
    let g = make_amps();
    let x0 = StrategyProfile::random_dirichlet(&g.action_counts(), &mut ChaCha8Rng::seed_from_u64(1));
    let schedules = [
        ("linear", ExplorationSchedule::linear(vec![1.0; 2], vec![0.0; 2], 50.0)?),
        ("ete", ExplorationSchedule::ete(vec![1.0; 2], vec![0.0; 2], 50.0)?),
        ("clr1", ExplorationSchedule::clr1(vec![1.0; 2], vec![2.0; 2], vec![0.0; 2], 50.0)?),
    ];
    for (name, s) in schedules {
        let out = anneal_select(&g, &s, &x0, &IntegratorConfig::rk4())?;
        let x = &out.final_profile;
        println!(
            "{name:>6}: x(H) = {:.4}, y(H) = {:.4}, exploitability {:.2e}",
            x.player(0)[0],
            x.player(1)[0],
            out.exploitability
        );
    }
    Ok(())
}
