//! Arrival at infinity for the quantum birth process.
//!
//! Compares an explosive rate sequence with a non-explosive one: the
//! Laplace transform of the arrival time is a convergent product, and the
//! truncated conservativity defect approaches it as levels are added.

use semigroup_lab::birth::{arrival_laplace, conservativity_defect};
use semigroup_lab::{RateSequence, Result, TruncatedOperator};

fn main() -> Result<()> {
    // polynomial tails shrink like 1/J, so their bracket is only asked to 1e-6
    for (spec, tol) in [("geom:2", 1e-12), ("poly:1:2", 1e-6), ("poly:1:1", 1e-6)] {
        let rates: RateSequence = spec.parse().expect("valid rate spec");
        println!("rates {rates}  explosive: {:?}", rates.explosive());
        for lambda in [0.5, 1.0, 2.0] {
            let a = arrival_laplace(&rates, lambda, 0, tol)?;
            print!("  lambda={lambda:<4} E[exp(-lambda T)] = {:.10} (+/- {:.1e})", a.value, a.width());
            let defects: Vec<String> = [10, 40, 160]
                .iter()
                .map(|&n| conservativity_defect(&rates, lambda, &TruncatedOperator::unit(n, 0, 0)))
                .map(|d| d.map(|d| format!("{d:.6}")))
                .collect::<Result<_>>()?;
            println!("  defect at N=10,40,160: {}", defects.join(", "));
        }
    }
    Ok(())
}
