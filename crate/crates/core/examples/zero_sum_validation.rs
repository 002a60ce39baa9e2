//! Validates the printed and corrected matching-pennies payoffs and
//! recovers weights from payoffs alone.

use smoothq::experiments::{make_amps, printed_amps};
use smoothq::game::{infer_weights, validate_weighted_zero_sum, ZeroSumMode};

fn main() -> smoothq::Result<()> {
    for g in [printed_amps(), make_amps()] {
        let report = validate_weighted_zero_sum(&g, ZeroSumMode::Exhaustive)?;
        let inferred = infer_weights(&g)?;
        println!(
            "B = {:?}: passed {}, residual {:.2e}, inferred weights {:?}",
            g.edges()[1].payoff.to_rows(),
            report.passed,
            report.max_residual,
            inferred.weights
        );
    }
    Ok(())
}
