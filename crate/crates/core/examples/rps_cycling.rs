//! Rock-paper-scissors without exploration: the KL divergence from uniform
//! oscillates instead of decaying.

use smoothq::dynamics::{integrate, IntegratorConfig};
use smoothq::experiments::make_rps;
use smoothq::lyapunov::kl_divergence;
use smoothq::StrategyProfile;

fn main() -> smoothq::Result<()> {
    let g = make_rps();
    let x0 = StrategyProfile::new(vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5]])?;
    let cfg = IntegratorConfig::euler().with_max_steps(200_000).with_record_every(5_000).with_stop_tolerance(None);
    let traj = integrate(&g, &x0, &cfg, None)?;
    let u = g.uniform_profile();
    println!("{:>8} {:>12}", "t", "D(x||u)");
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let d: f64 = x.players().zip(u.players()).map(|(a, b)| kl_divergence(a, b).unwrap()).sum();
        println!("{t:>8.2} {d:>12.6}");
    }
    Ok(())
}
