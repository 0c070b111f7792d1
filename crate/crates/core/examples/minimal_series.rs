//! The minimal resolvent built term by term from no-event and jump parts.

use semigroup_lab::birth::{qb_resolvent_closed, qb_spec};
use semigroup_lab::minimal::{resolvent_direct, resolvent_series, DenseResolvent, SeriesOptions};
use semigroup_lab::operator::trace_norm;
use semigroup_lab::{RateSequence, Result, SuperOperator, TruncatedOperator, C64};

fn main() -> Result<()> {
    let rates = RateSequence::polynomial(1.0, 2.0)?;
    let n = 30;
    let lambda = 1.0;
    let spec = qb_spec(&rates, n)?;

    // coherent superposition of the three lowest levels
    let v = [1.0, 0.5, 0.25];
    let norm: f64 = v.iter().map(|x| x * x).sum();
    let rho = TruncatedOperator::from_fn(n, |i, j| {
        if i < 3 && j < 3 {
            C64::new(v[i] * v[j] / norm, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });

    let r0 = DenseResolvent::new(&spec.no_event(), lambda)?;
    let jump = spec.jump();
    let res = resolvent_series(|x| r0.apply(x), |x| Ok(jump.apply(x)), lambda, &rho, SeriesOptions::default())?;
    for (k, t) in res.trace_trajectory.iter().enumerate().step_by(5) {
        println!("after {:>2} terms  lambda tr R rho = {t:.12}", k + 1);
    }
    let direct = resolvent_direct(&spec, lambda, &rho)?;
    let closed = qb_resolvent_closed(&rates, lambda, &rho)?;
    println!("iterations: {}  converged: {}", res.iterations, res.converged);
    println!("||series - dense||_1  = {:.2e}", trace_norm(&(&res.value - &direct)));
    println!("||closed - dense||_1  = {:.2e}", trace_norm(&(&closed - &direct)));
    Ok(())
}
