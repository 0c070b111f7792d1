//! Sampling explosion times of the classical birth chain and comparing the
//! empirical Laplace transform, split by number of jumps, with the exact values.

use semigroup_lab::birth::arrival_laplace;
use semigroup_lab::trajectory::{empirical_laplace, n_event_estimate, n_event_laplace_terms, sample_many, RngContract};
use semigroup_lab::{RateSequence, Result, TruncatedOperator};

fn main() -> Result<()> {
    let rates = RateSequence::geometric(2.0)?;
    let samples = sample_many(&rates, 0, 200.0, 64, RngContract::new(7), 50_000)?;
    let mean_t: f64 = samples.iter().filter_map(|s| s.explosion_time()).sum::<f64>() / samples.len() as f64;
    println!("mean explosion time {mean_t:.4} (exact 2)");

    for lambda in [0.5, 1.0, 2.0] {
        let est = empirical_laplace(&rates, &samples, lambda)?;
        let exact = arrival_laplace(&rates, lambda, 0, 1e-14)?;
        println!(
            "lambda={lambda}: Monte Carlo {:.5} +/- {:.5}, product {:.5}",
            est.mean, est.standard_error, exact.value
        );
    }

    let terms = n_event_laplace_terms(&rates, 1.0, 4, &TruncatedOperator::unit(40, 0, 0))?;
    for (k, term) in terms.iter().enumerate() {
        let est = n_event_estimate(&samples, 1.0, k)?;
        println!("exactly {k} jumps: analytic {term:.5}, Monte Carlo {:.5} +/- {:.5}", est.mean, est.standard_error);
    }
    Ok(())
}
