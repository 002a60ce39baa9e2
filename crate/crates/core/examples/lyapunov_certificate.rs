//! Certifies convergence to the QRE on a random weighted zero-sum network.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smoothq::dynamics::{integrate, IntegratorConfig};
use smoothq::experiments::{random_weighted_zero_sum, RandomGameSpec};
use smoothq::lyapunov::certify_trajectory;
use smoothq::qre::solve_qre;
use smoothq::{StrategyProfile, ValidatedGame};

fn main() -> smoothq::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let spec = RandomGameSpec { players: 4, max_actions: 4, temperature_range: (0.05, 1.0), ..Default::default() };
    let g = ValidatedGame::new(random_weighted_zero_sum(&mut rng, &spec))?;
    println!("players {}, actions {:?}, rates {:.3?}", g.num_players(), g.action_counts(), g.temperatures());

    let p = solve_qre(&g, 1e-12, 200_000)?.profile;
    let x0 = StrategyProfile::random_dirichlet(&g.action_counts(), &mut rng);
    let cfg = IntegratorConfig::rk4().with_horizon(30.0).with_record_every(100).with_stop_tolerance(None);
    let report = certify_trajectory(&g, &integrate(&g, &x0, &cfg, None)?, &p)?;

    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "t", "phi", "dphi/dt", "fd", "bound");
    for i in 0..report.times.len() {
        println!(
            "{:>6.1} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            report.times[i], report.phi[i], report.formula_derivative[i], report.fd_derivative[i], report.rate_bound[i]
        );
    }
    println!("certificate passed: {}", report.passed());
    Ok(())
}
