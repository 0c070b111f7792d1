use proptest::prelude::*;

use semigroup_lab::birth::{qb_resolvent_closed, qb_spec};
use semigroup_lab::minimal::resolvent_direct;
use semigroup_lab::operator::{choi_matrix, hermitian_eigenvalues, is_positive_semidefinite, TruncatedOperator};
use semigroup_lab::standard::{apply_standard, gauge_transform, StandardGeneratorSpec};
use semigroup_lab::{RateSequence, C64};

fn density(entries: &[(f64, f64)], n: usize) -> TruncatedOperator {
    let a = TruncatedOperator::from_fn(n, |i, j| {
        let (re, im) = entries[(i * n + j) % entries.len()];
        C64::new(re, im)
    });
    let rho = &a.compose(&a.adjoint()) + &TruncatedOperator::identity(n).scale_real(1e-3);
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr)
}

fn rates_list() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..50.0, 2..9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_form_agrees_with_dense_solve(
        mu in rates_list(),
        lambda in 0.05f64..10.0,
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
    ) {
        let n = mu.len();
        let rates = RateSequence::explicit(mu).unwrap();
        let rho = density(&entries, n);
        let closed = qb_resolvent_closed(&rates, lambda, &rho).unwrap();
        let direct = resolvent_direct(&qb_spec(&rates, n).unwrap(), lambda, &rho).unwrap();
        prop_assert!(closed.max_abs_diff(&direct) <= 1e-10 * (1.0 + closed.max_abs()));
    }

    #[test]
    fn resolvent_is_positive_and_subnormalized(
        mu in rates_list(),
        lambda in 0.05f64..10.0,
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
    ) {
        let n = mu.len();
        let rates = RateSequence::explicit(mu).unwrap();
        let r = qb_resolvent_closed(&rates, lambda, &density(&entries, n)).unwrap();
        let scaled = r.scale_real(lambda);
        prop_assert!(scaled.trace().re <= 1.0 + 1e-12);
        prop_assert!(hermitian_eigenvalues(&scaled).unwrap()[0] >= -1e-12);
    }

    #[test]
    fn gauge_changes_leave_the_generator_alone(
        mu in rates_list(),
        shift in (-3.0f64..3.0, -3.0f64..3.0),
        beta in -5.0f64..5.0,
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
    ) {
        let n = mu.len();
        let spec = qb_spec(&RateSequence::explicit(mu).unwrap(), n).unwrap();
        let gauged = gauge_transform(&spec, &[C64::new(shift.0, shift.1)], beta).unwrap();
        let rho = density(&entries, n);
        let a = apply_standard(&spec, &rho).unwrap();
        let b = apply_standard(&gauged, &rho).unwrap();
        prop_assert!(a.max_abs_diff(&b) <= 1e-12 * (1.0 + a.max_abs()));
    }

    #[test]
    fn jump_parts_are_completely_positive(
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9..=9),
        count in 1usize..3,
    ) {
        let n = 3;
        let jumps: Vec<TruncatedOperator> = (0..count)
            .map(|c| TruncatedOperator::from_fn(n, |i, j| {
                let (re, im) = entries[(i * n + j + c) % entries.len()];
                C64::new(re, im)
            }))
            .collect();
        let spec = StandardGeneratorSpec::conservative(jumps).unwrap();
        let choi = choi_matrix(&spec.jump(), n).unwrap();
        prop_assert!(is_positive_semidefinite(&choi, 1e-10).unwrap());
    }
}
