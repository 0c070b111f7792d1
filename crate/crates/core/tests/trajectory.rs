use semigroup_lab::birth::{arrival_laplace, qb_resolvent_closed};
use semigroup_lab::operator::TruncatedOperator;
use semigroup_lab::trajectory::{
    empirical_laplace, n_event_estimate, n_event_laplace_terms, sample_many, shift_arrival_density, RngContract,
};
use semigroup_lab::{RateSequence, C64};

fn geometric() -> RateSequence {
    RateSequence::geometric(2.0).unwrap()
}

#[test]
fn mean_explosion_time_is_sum_of_mean_holding_times() {
    let s = sample_many(&geometric(), 0, 200.0, 64, RngContract::new(11), 100_000).unwrap();
    assert!(s.iter().all(|x| x.exploded_within_horizon));
    let times: Vec<f64> = s.iter().map(|x| x.explosion_time().unwrap()).collect();
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    assert!((mean - 2.0).abs() <= 3.0 * se, "{mean} +- {se}");
}

#[test]
fn constant_rate_counts_are_poisson() {
    let rates = RateSequence::constant(3.0).unwrap();
    let horizon = 2.0;
    let s = sample_many(&rates, 0, horizon, 10_000, RngContract::new(5), 20_000).unwrap();
    let counts: Vec<f64> = s.iter().map(|x| x.jumps_before(horizon) as f64).collect();
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let se = (counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    assert!((mean - 6.0).abs() <= 3.0 * se, "{mean} +- {se}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample_many(&geometric(), 0, 50.0, 64, RngContract::new(99), 500).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn laplace_estimate_matches_product() {
    let rates = geometric();
    let s = sample_many(&rates, 0, 200.0, 64, RngContract::new(2024), 100_000).unwrap();
    let est = empirical_laplace(&rates, &s, 1.0).unwrap();
    let exact = arrival_laplace(&rates, 1.0, 0, 1e-14).unwrap();
    assert!(exact.width() <= 1e-10);
    assert!(est.standard_error <= 1e-3);
    assert!((est.mean - exact.value).abs() <= 3.0 * est.standard_error, "{est:?} vs {exact:?}");
}

#[test]
fn bias_check_rejects_short_paths() {
    let rates = geometric();
    let s = sample_many(&rates, 0, 200.0, 4, RngContract::new(1), 10_000).unwrap();
    assert!(empirical_laplace(&rates, &s, 1.0).is_err());
}

#[test]
fn non_explosive_rates_are_censored() {
    let rates = RateSequence::polynomial(1.0, 1.0).unwrap();
    let horizon = 5.0;
    let s = sample_many(&rates, 0, horizon, 100_000, RngContract::new(3), 2_000).unwrap();
    let est = empirical_laplace(&rates, &s, 1.0).unwrap();
    assert_eq!(est.censored_fraction, 1.0);
    assert_eq!(est.mean, 0.0);
    assert!((est.censoring_bound - (-horizon).exp()).abs() < 1e-20);
}

#[test]
fn standard_error_halves_when_samples_quadruple() {
    let rates = geometric();
    let c = RngContract::new(8);
    let small = empirical_laplace(&rates, &sample_many(&rates, 0, 200.0, 64, c, 10_000).unwrap(), 1.0).unwrap();
    let large = empirical_laplace(&rates, &sample_many(&rates, 0, 200.0, 64, c, 40_000).unwrap(), 1.0).unwrap();
    let ratio = large.standard_error / small.standard_error;
    assert!((ratio - 0.5).abs() <= 0.1, "{ratio}");
}

#[test]
fn event_terms_match_monte_carlo() {
    let rates = geometric();
    let rho = TruncatedOperator::unit(30, 0, 0);
    let terms = n_event_laplace_terms(&rates, 1.0, 3, &rho).unwrap();
    assert!((terms[1] - 1.0 / (2.0 * 3.0)).abs() < 1e-15);
    let s = sample_many(&rates, 0, 200.0, 64, RngContract::new(77), 100_000).unwrap();
    for (k, term) in terms.iter().enumerate() {
        let est = n_event_estimate(&s, 1.0, k).unwrap();
        assert!((est.mean - term).abs() <= 3.0 * est.standard_error, "k={k}: {est:?} vs {term}");
    }
}

#[test]
fn event_terms_sum_to_the_resolvent_trace() {
    let rates = geometric();
    let n = 40;
    let rho = TruncatedOperator::from_fn(n, |i, j| {
        if i < 3 && j < 3 {
            C64::new(if i == j { 1.0 / 3.0 } else { 0.1 }, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let terms = n_event_laplace_terms(&rates, 1.0, 45, &rho).unwrap();
    let exact = qb_resolvent_closed(&rates, 1.0, &rho).unwrap().trace().re;
    let mut sum = 0.0;
    let mut last_gap = f64::INFINITY;
    for t in &terms {
        sum += t;
        let gap = exact - sum;
        assert!(gap <= last_gap + 1e-15);
        last_gap = gap;
    }
    assert!(last_gap.abs() <= 1e-8, "{last_gap}");
}

#[test]
fn shift_demo_accounts_for_all_mass() {
    let h = 1e-3;
    let psi: Vec<C64> = (0..=5000)
        .map(|i| {
            let x = i as f64 * h;
            if (1.0..=2.0).contains(&x) {
                let s = (std::f64::consts::PI * (x - 1.0)).sin();
                C64::new(s * s, 0.5 * s)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let out = shift_arrival_density(&psi, h).unwrap();
    // int sin^4 + sin^2 / 4 over one period = 3/8 + 1/8
    assert!((out.norm_sq - 0.5).abs() < 1e-6, "{}", out.norm_sq);
    assert!((out.cumulative.last().unwrap() - out.norm_sq).abs() < 1e-15);
}

#[test]
fn shifted_gaussian_profile() {
    let h = 1e-2;
    let psi: Vec<C64> = (0..=1000).map(|i| C64::new((-(i as f64 * h - 3.0).powi(2)).exp(), 0.0)).collect();
    let out = shift_arrival_density(&psi, h).unwrap();
    for i in [0, 150, 300, 800] {
        let remaining: f64 = {
            let tail = &out.density[i..];
            h * (tail.iter().sum::<f64>() - 0.5 * (tail[0] + tail[tail.len() - 1]))
        };
        assert!((out.cumulative[i] - (out.norm_sq - remaining)).abs() < 1e-12);
    }
}
