//! Feeding the trace lost at infinity back into the ground state.
//!
//! The base generator leaks probability for explosive rates; the reset
//! makes the evolution conservative while agreeing with the base on every
//! finite-rank element that stays away from the truncation edge.

use semigroup_lab::birth::{qb_spec, BirthGenerator};
use semigroup_lab::minimal::SeriesOptions;
use semigroup_lab::nonstandard::{
    conservativity_residual, finite_rank_contraction_check, standardness_falsifier, FalsifierOptions, NonstandardSpec,
};
use semigroup_lab::{RateSequence, Result};

fn main() -> Result<()> {
    let rates = RateSequence::geometric(2.0)?;
    let n = 30;
    let spec = NonstandardSpec::ground_reset(BirthGenerator::new(&rates, n)?)?;

    for t in [0.5, 1.0, 4.0] {
        let base = conservativity_residual(spec.base(), spec.rho_hat(), t)?;
        let hat = conservativity_residual(&spec, spec.rho_hat(), t)?;
        println!("t={t}: trace lost by base {base:.6}, by reset generator {hat:.1e}");
    }

    let rep = standardness_falsifier(&spec, FalsifierOptions::default())?;
    println!("{rep:#?}");

    let fr = finite_rank_contraction_check(&spec, &qb_spec(&rates, n)?, 1.0, spec.rho_hat(), SeriesOptions::default())?;
    println!(
        "P R eigenvalue {:.6}, series iterations {} (base {})",
        fr.p11, fr.hat_iterations, fr.base_iterations
    );
    Ok(())
}
