//! Structural checks on a standard generator: gauge freedom, complete
//! positivity of the jump part and the Euler product formula.

use semigroup_lab::birth::qb_spec;
use semigroup_lab::minimal::euler_semigroup_dense;
use semigroup_lab::operator::{choi_matrix, hermitian_eigenvalues, matrix_exponential_apply, trace_norm};
use semigroup_lab::standard::{apply_standard, gauge_transform, max_dissipativity_eigenvalue};
use semigroup_lab::{RateSequence, Result, TruncatedOperator, C64};

fn main() -> Result<()> {
    let rates = RateSequence::polynomial(1.0, 2.0)?;
    let spec = qb_spec(&rates, 6)?;
    let rho = TruncatedOperator::from_fn(6, |i, j| C64::new(1.0 / (1 + i + j) as f64, 0.0));

    let gauged = gauge_transform(&spec, &[C64::new(0.7, -1.3)], 2.0)?;
    let diff = apply_standard(&spec, &rho)?.max_abs_diff(&apply_standard(&gauged, &rho)?);
    println!("generator change under gauge: {diff:.1e}");

    let choi = choi_matrix(&spec.jump(), 6)?;
    println!("smallest Choi eigenvalue of the jump part: {:.1e}", hermitian_eigenvalues(&choi)?[0]);
    println!("dissipativity (largest eigenvalue, should be <= 0): {:.1e}", max_dissipativity_eigenvalue(&spec, 6)?);

    let exact = matrix_exponential_apply(&spec, 1.0, &rho, 1e-15)?;
    for k in [4, 8, 12] {
        let n = 1usize << k;
        let err = trace_norm(&(&euler_semigroup_dense(&spec, 1.0, n, &rho)? - &exact));
        println!("Euler n = {n:>5}: error {err:.3e}, n * error {:.4}", n as f64 * err);
    }
    Ok(())
}
