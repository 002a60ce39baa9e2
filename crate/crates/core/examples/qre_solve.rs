//! QRE of asymmetric matching pennies as the exploration rate falls.

use smoothq::experiments::{make_amps, AMPS_NASH};
use smoothq::qre::{exploitability, solve_qre};

fn main() -> smoothq::Result<()> {
    let g = make_amps();
    for note in g.notes() {
        println!("note: {note}");
    }
    println!("{:>6} {:>10} {:>10} {:>12} {:>10}", "T", "x(H)", "y(H)", "residual", "gap");
    for t in [10.0, 3.0, 1.0, 0.3, 0.1, 0.03] {
        let gt = g.with_temperatures(&[t, t])?;
        let sol = solve_qre(&gt, 1e-12, 200_000)?;
        let p = &sol.profile;
        println!(
            "{t:>6} {:>10.6} {:>10.6} {:>12.2e} {:>10.2e}",
            p.player(0)[0],
            p.player(1)[0],
            sol.residual,
            exploitability(&g, p)?
        );
    }
    println!("Nash: x(H) = {:.6}, y(H) = {:.6}", AMPS_NASH.0[0], AMPS_NASH.1[0]);
    Ok(())
}
