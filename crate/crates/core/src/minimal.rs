//! Resolvents and the minimal-solution series.
//!
//! The minimal resolvent of a completely positive perturbation `P` of a
//! generator with resolvent `R0` is the limit of the partial sums
//! `R^(n) = sum_{k <= n} R0 (P R0)^k`. At finite truncation every map is
//! bounded, so the limit coincides with the direct resolvent of `G0 + P`.

use nalgebra::{DMatrix, DVector, LU, Dyn};

use crate::error::{Error, Result};
use crate::operator::{superoperator_matrix, trace_norm, SuperOperator, TruncatedOperator, C64};

/// Factorized `(lambda - G)` on the `N^2`-dimensional operator space.
pub struct DenseResolvent {
    dim: usize,
    lambda: f64,
    lu: LU<C64, Dyn, Dyn>,
}

impl DenseResolvent {
    pub fn new<S: SuperOperator + ?Sized>(g: &S, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
        }
        let n = g.dim();
        let s = superoperator_matrix(g)?;
        let a = DMatrix::identity(n * n, n * n) * C64::new(lambda, 0.0) - s;
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(Error::Singular);
        }
        Ok(Self { dim: n, lambda, lu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn apply(&self, rho: &TruncatedOperator) -> Result<TruncatedOperator> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        let x: DVector<C64> = self.lu.solve(&rho.to_vec()).ok_or(Error::Singular)?;
        TruncatedOperator::new(TruncatedOperator::from_vec(self.dim, &x).into_matrix())
    }
}

/// The unique `X` with `lambda X - G(X) = rho`.
pub fn resolvent_direct<S: SuperOperator + ?Sized>(
    g: &S,
    lambda: f64,
    rho: &TruncatedOperator,
) -> Result<TruncatedOperator> {
    DenseResolvent::new(g, lambda)?.apply(rho)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations without decrease that, together with growth past the
    /// initial increment, count as divergence.
    pub stall_window: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 1_000_000,
            stall_window: 100,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ResolventSeriesResult {
    pub value: TruncatedOperator,
    pub iterations: usize,
    /// `lambda * tr R^(n) rho` for each partial sum.
    pub trace_trajectory: Vec<f64>,
    pub converged: bool,
}

impl ResolventSeriesResult {
    pub fn trace_monotone(&self, slack: f64) -> bool {
        self.trace_trajectory.windows(2).all(|w| w[1] >= w[0] - slack)
    }
}

/// Partial sums of `sum_n R0 (P R0)^n rho`.
///
/// Stops when the trace-norm increment is below `tol` both absolutely and
/// relative to the running sum. For positive `rho` the normalization
/// `tr P R0 rho <= tr rho` is checked up front.
pub fn resolvent_series<R0, P>(
    r0: R0,
    p: P,
    lambda: f64,
    rho: &TruncatedOperator,
    opts: SeriesOptions,
) -> Result<ResolventSeriesResult>
where
    R0: Fn(&TruncatedOperator) -> Result<TruncatedOperator>,
    P: Fn(&TruncatedOperator) -> Result<TruncatedOperator>,
{
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    let mut term = r0(rho)?;
    if rho.is_self_adjoint() && crate::operator::is_positive_semidefinite(rho, 1e-12)? {
        let tr_rho = rho.trace().re;
        let tr_pr = p(&term)?.trace().re;
        if tr_pr > tr_rho + 1e-10 * tr_rho.abs().max(1.0) {
            return Err(Error::Precondition(format!(
                "tr P R0 rho = {tr_pr} exceeds tr rho = {tr_rho}"
            )));
        }
    }
    let mut value = term.clone();
    let mut trajectory = vec![lambda * value.trace().re];
    let initial = trace_norm(&term);
    let mut last = initial;
    let mut stalled = 0usize;
    let mut iterations = 1;
    let done = |inc: f64, total: f64| inc < opts.tol && inc <= opts.tol * total;
    if done(initial, initial) || initial == 0.0 {
        return Ok(ResolventSeriesResult {
            value,
            iterations,
            trace_trajectory: trajectory,
            converged: true,
        });
    }
    while iterations < opts.max_iter {
        term = r0(&p(&term)?)?;
        value = &value + &term;
        iterations += 1;
        trajectory.push(lambda * value.trace().re);
        let inc = trace_norm(&term);
        if done(inc, trace_norm(&value)) {
            return Ok(ResolventSeriesResult {
                value,
                iterations,
                trace_trajectory: trajectory,
                converged: true,
            });
        }
        if inc >= last {
            stalled += 1;
        } else {
            stalled = 0;
        }
        if stalled >= opts.stall_window && inc > initial {
            return Err(Error::Divergence {
                iterations,
                increment: inc,
                initial,
            });
        }
        last = inc;
    }
    Ok(ResolventSeriesResult {
        value,
        iterations,
        trace_trajectory: trajectory,
        converged: false,
    })
}

/// `((n/t) R_{n/t})^n rho`, converging to `exp(tG) rho` as `n` grows.
pub fn euler_semigroup<R>(resolvent: R, t: f64, n: usize, rho: &TruncatedOperator) -> Result<TruncatedOperator>
where
    R: Fn(f64, &TruncatedOperator) -> Result<TruncatedOperator>,
{
    if !(t > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!("need t > 0 and n >= 1, got t={t}, n={n}")));
    }
    let lam = n as f64 / t;
    let mut x = rho.clone();
    for _ in 0..n {
        x = resolvent(lam, &x)?.scale_real(lam);
    }
    Ok(x)
}

/// Euler reconstruction with one factorization reused across all `n` steps.
pub fn euler_semigroup_dense<S: SuperOperator + ?Sized>(
    g: &S,
    t: f64,
    n: usize,
    rho: &TruncatedOperator,
) -> Result<TruncatedOperator> {
    if !(t > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!("need t > 0 and n >= 1, got t={t}, n={n}")));
    }
    let r = DenseResolvent::new(g, n as f64 / t)?;
    euler_semigroup(|_, x| r.apply(x), t, n, rho)
}

/// `(R rho', lambda R rho' - rho')`: a generator-domain element and its image.
pub fn domain_element<R>(
    resolvent: R,
    lambda: f64,
    rho_prime: &TruncatedOperator,
) -> Result<(TruncatedOperator, TruncatedOperator)>
where
    R: Fn(f64, &TruncatedOperator) -> Result<TruncatedOperator>,
{
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    let x = resolvent(lambda, rho_prime)?;
    let gx = &x.scale_real(lambda) - rho_prime;
    Ok((x, gx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{FnMap, ZeroMap};

    #[test]
    fn zero_generator_resolvent_is_scalar() {
        let rho = TruncatedOperator::from_fn(3, |i, j| C64::new(i as f64 - j as f64, (i * j) as f64));
        let r = resolvent_direct(&ZeroMap(3), 4.0, &rho).unwrap();
        assert!(r.max_abs_diff(&rho.scale_real(0.25)) < 1e-15);
        assert!(resolvent_direct(&ZeroMap(3), 0.0, &rho).is_err());
    }

    #[test]
    fn singular_system_is_reported() {
        let g = FnMap::new(2, |r: &TruncatedOperator| r.scale_real(2.0));
        assert!(matches!(DenseResolvent::new(&g, 2.0), Err(Error::Singular)));
    }

    #[test]
    fn zero_perturbation_stops_after_one_term() {
        let rho = TruncatedOperator::unit(2, 0, 0);
        let res = resolvent_series(
            |x| Ok(x.scale_real(0.5)),
            |x| Ok(TruncatedOperator::zeros(x.dim())),
            2.0,
            &rho,
            SeriesOptions::default(),
        )
        .unwrap();
        assert!(res.converged);
        assert_eq!(res.value, rho.scale_real(0.5));
    }

    #[test]
    fn oversized_perturbation_is_rejected() {
        let rho = TruncatedOperator::unit(1, 0, 0);
        let out = resolvent_series(|x| Ok(x.clone()), |x| Ok(x.scale_real(2.0)), 1.0, &rho, SeriesOptions::default());
        assert!(matches!(out, Err(Error::Precondition(_))));
    }

    #[test]
    fn growing_series_reports_divergence() {
        // not positive, so the normalization precheck is skipped
        let rho = TruncatedOperator::from_real_diagonal(&[1.0, -1.0]);
        let opts = SeriesOptions {
            stall_window: 10,
            ..SeriesOptions::default()
        };
        let out = resolvent_series(|x| Ok(x.clone()), |x| Ok(x.scale_real(1.1)), 1.0, &rho, opts);
        assert!(matches!(out, Err(Error::Divergence { .. })), "{out:?}");
    }

    #[test]
    fn euler_of_zero_generator_is_identity() {
        let rho = TruncatedOperator::from_real_diagonal(&[0.3, 0.7]);
        for n in [1, 4, 17] {
            let out = euler_semigroup_dense(&ZeroMap(2), 0.5, n, &rho).unwrap();
            assert!(out.max_abs_diff(&rho) < 1e-14);
        }
    }

    #[test]
    fn domain_element_of_zero_is_zero() {
        let z = TruncatedOperator::zeros(2);
        let (x, gx) = domain_element(|l, r| resolvent_direct(&ZeroMap(2), l, r), 1.0, &z).unwrap();
        assert_eq!(x, z);
        assert_eq!(gx, z);
    }
}
