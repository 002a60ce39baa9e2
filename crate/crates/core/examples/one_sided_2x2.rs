//! A 2x2 game where only the second player explores: the first player's
//! rest point slides to the boundary past the critical rate.

use smoothq::analytic::{critical_temperature, empirical_critical_temperature, rest_point, simulate_rest_point};
use smoothq::analytic::TwoByTwoGame;

fn main() -> smoothq::Result<()> {
    let g = TwoByTwoGame::new([[1.0, -1.0], [-1.0, 0.0]], [[-1.0, 1.0], [1.0, 0.0]])?;
    let tc = critical_temperature(&g);
    println!("coefficients {:?}, critical rate {tc:.6}", g.coefficients());
    for f in [0.0, 0.25, 0.5, 0.9, 1.1, 2.0] {
        let t = f * tc;
        let pred = rest_point(&g, t)?;
        match pred.point {
            None => println!("T_y = {t:.4}: {:?}", pred.regime),
            Some((x, y)) => {
                let sim = simulate_rest_point(&g, t, (0.4, 0.6), 1e5)?;
                println!(
                    "T_y = {t:.4}: {:?} ({x:.6}, {y:.6}), simulated ({:.6}, {:.6})",
                    pred.regime, sim.x, sim.y
                );
            }
        }
    }
    let found = empirical_critical_temperature(&g, (0.4, 0.6), (0.5 * tc, 2.0 * tc), 1e-3, 1e5)?;
    println!("bisection {found:.4} vs closed form {tc:.4}");
    Ok(())
}
