//! Mean-field Q-learning with a small learning rate next to the continuous
//! dynamics on the rescaled clock.

use smoothq::dynamics::{discrete_play, integrate, IntegratorConfig, QValueState};
use smoothq::experiments::make_amps;
use smoothq::StrategyProfile;

fn main() -> smoothq::Result<()> {
    let (t, alpha) = (1.0, 1e-3);
    let g = make_amps().with_temperatures(&[t, t])?;
    let x0 = StrategyProfile::new(vec![vec![0.8, 0.2], vec![0.3, 0.7]])?;
    let discrete = discrete_play(&g, &QValueState::from_profile(&g, &x0, alpha)?, 20_000, 2_000)?;
    let h = alpha / t;
    let cfg = IntegratorConfig::rk4().with_step(h).with_max_steps(20_000).with_record_every(2_000).with_stop_tolerance(None);
    let ode = integrate(&g, &x0, &cfg, None)?;
    println!("{:>7} {:>10} {:>10} {:>10}", "round", "discrete", "ode", "gap");
    for ((n, xd), xc) in discrete.times.iter().zip(&discrete.states).zip(&ode.states) {
        println!("{n:>7} {:>10.6} {:>10.6} {:>10.2e}", xd.player(0)[0], xc.player(0)[0], xd.sup_distance(xc));
    }
    Ok(())
}
