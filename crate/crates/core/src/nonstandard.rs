//! Reset perturbation `g^ rho = g rho - tr(g rho) rho^`.
//!
//! Whatever trace the base generator loses is re-injected in the fixed state
//! `rho^`, so the perturbed semigroup is conservative even when the base one
//! is not. On operators the base generator maps trace-preservingly the two
//! generators agree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::birth::{conservativity_defect, sigma_q, BirthGenerator};
use crate::error::{Error, Result};
use crate::minimal::{resolvent_series, DenseResolvent, SeriesOptions};
use crate::operator::{is_positive_semidefinite, matrix_exponential_apply, trace_norm, SuperOperator, TruncatedOperator, C64};
use crate::rates::RateSequence;
use crate::standard::StandardGeneratorSpec;

const TRACE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct NonstandardSpec<G> {
    base: G,
    rho_hat: TruncatedOperator,
}

impl<G: SuperOperator> NonstandardSpec<G> {
    /// `rho_hat` must be positive with unit trace.
    pub fn new(base: G, rho_hat: TruncatedOperator) -> Result<Self> {
        if rho_hat.dim() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                found: rho_hat.dim(),
            });
        }
        if !rho_hat.is_self_adjoint() || !is_positive_semidefinite(&rho_hat, TRACE_TOL)? {
            return Err(Error::Precondition("reset state must be positive".into()));
        }
        let tr = rho_hat.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::Precondition(format!("reset state must have trace 1, got {tr}")));
        }
        Ok(Self { base, rho_hat })
    }

    /// Reset into the ground level `|0><0|`.
    pub fn ground_reset(base: G) -> Result<Self> {
        let n = base.dim();
        Self::new(base, TruncatedOperator::unit(n, 0, 0))
    }

    pub fn base(&self) -> &G {
        &self.base
    }

    pub fn rho_hat(&self) -> &TruncatedOperator {
        &self.rho_hat
    }

    fn reset(&self, rho: &TruncatedOperator) -> TruncatedOperator {
        self.rho_hat.scale(-self.base.trace_of_image(rho))
    }
}

impl<G: SuperOperator> SuperOperator for NonstandardSpec<G> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn apply(&self, rho: &TruncatedOperator) -> TruncatedOperator {
        &self.base.apply(rho) + &self.reset(rho)
    }
}

pub fn nonstandard_apply<G: SuperOperator>(spec: &NonstandardSpec<G>, rho: &TruncatedOperator) -> Result<TruncatedOperator> {
    if rho.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: rho.dim(),
        });
    }
    Ok(spec.apply(rho))
}

/// `|1 - tr exp(tG) rho|` for a density matrix `rho`.
pub fn conservativity_residual<S: SuperOperator + ?Sized>(g: &S, rho: &TruncatedOperator, t: f64) -> Result<f64> {
    let tr = rho.trace();
    if !rho.is_self_adjoint() || (tr - C64::new(1.0, 0.0)).norm() > 1e-10 || !is_positive_semidefinite(rho, 1e-12)? {
        return Err(Error::Precondition("rho must be a density matrix".into()));
    }
    let out = matrix_exponential_apply(g, t, rho, 1e-14)?;
    Ok((C64::new(1.0, 0.0) - out.trace()).norm())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteRankReport {
    /// `tr rho^ - lambda tr R rho^`: the single nonzero eigenvalue of `P R`.
    pub p11: f64,
    pub contraction: bool,
    /// `||(P R)^{n+1} rho^|| / ||(P R)^n rho^||` for `n = 1..=20`.
    pub decay_ratios: Vec<f64>,
    /// Iterations of the series `sum R (P R)^n rho` for the perturbed generator.
    pub hat_iterations: usize,
    /// Iterations of the base generator's own no-event/jump series.
    pub base_iterations: usize,
    /// Trace-norm distance of the perturbed series from a dense solve.
    pub hat_series_error: f64,
}

impl FiniteRankReport {
    pub fn iterations_within_factor_two(&self) -> bool {
        let (a, b) = (self.hat_iterations.max(1), self.base_iterations.max(1));
        a.max(b) <= 2 * a.min(b)
    }
}

/// Spectrum of the rank-one reset relative to the base resolvent.
///
/// `standard` must be the standard form whose minimal solution is
/// `spec.base()`; its series supplies the reference iteration count.
pub fn finite_rank_contraction_check<G: SuperOperator>(
    spec: &NonstandardSpec<G>,
    standard: &StandardGeneratorSpec,
    lambda: f64,
    rho: &TruncatedOperator,
    opts: SeriesOptions,
) -> Result<FiniteRankReport> {
    if standard.dim() != spec.dim() || rho.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: if standard.dim() != spec.dim() { standard.dim() } else { rho.dim() },
        });
    }
    let r = DenseResolvent::new(&spec.base, lambda)?;
    let p = |x: &TruncatedOperator| Ok(spec.reset(x));
    let p11 = (spec.rho_hat.trace() - r.apply(&spec.rho_hat)?.trace() * lambda).re;

    let mut v = spec.rho_hat.clone();
    let mut norms = Vec::with_capacity(21);
    for _ in 0..21 {
        v = p(&r.apply(&v)?)?;
        norms.push(trace_norm(&v));
    }
    let decay_ratios = norms.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect();

    let hat = resolvent_series(|x| r.apply(x), p, lambda, rho, opts)?;
    let direct = DenseResolvent::new(spec, lambda)?.apply(rho)?;
    let r0 = DenseResolvent::new(&standard.no_event(), lambda)?;
    let jump = standard.jump();
    let base = resolvent_series(|x| r0.apply(x), |x| Ok(jump.apply(x)), lambda, rho, opts)?;
    Ok(FiniteRankReport {
        p11,
        contraction: p11.abs() < 1.0,
        decay_ratios,
        hat_iterations: hat.iterations,
        base_iterations: base.iterations,
        hat_series_error: trace_norm(&(&hat.value - &direct)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FalsifierOptions {
    pub samples: usize,
    pub seed: u64,
    pub t: f64,
    pub lambda: f64,
}

impl Default for FalsifierOptions {
    fn default() -> Self {
        Self {
            samples: 100,
            seed: 0,
            t: 1.0,
            lambda: 1.0,
        }
    }
}

/// Numerical ingredients of the non-standardness argument. Not a proof.
#[derive(Clone, Debug, PartialEq)]
pub struct FalsifierReport {
    /// (i) `max |g^ rho - g rho|` over random finite-rank `rho` on interior levels.
    pub interior_deviation: f64,
    /// (ii) `||g^ sigma - g sigma||_1` for `sigma = sum 1/mu_n |n><n|`.
    pub sigma_difference: f64,
    /// (iii) `|1 - tr exp(t g^) rho^|`.
    pub hat_residual: f64,
    /// (iii) `1 - lambda tr R_lambda rho^` for the base generator.
    pub base_defect: f64,
}

impl FalsifierReport {
    /// The thresholds at which the three ingredients are taken to hold.
    pub fn holds(&self) -> bool {
        self.interior_deviation <= 1e-12
            && (self.sigma_difference - 1.0).abs() <= 1e-10
            && self.hat_residual <= 1e-9
            && self.base_defect > 0.0
    }
}

pub fn standardness_falsifier(spec: &NonstandardSpec<BirthGenerator>, opts: FalsifierOptions) -> Result<FalsifierReport> {
    let n = spec.dim();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two levels".into()));
    }
    let rates = RateSequence::explicit(spec.base.rates().to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut interior_deviation: f64 = 0.0;
    for _ in 0..opts.samples {
        let rho = random_interior_finite_rank(&mut rng, n);
        let dev = spec.apply(&rho).max_abs_diff(&spec.base.apply(&rho));
        interior_deviation = interior_deviation.max(dev);
    }
    let sigma = sigma_q(&rates, 0, n)?;
    let sigma_difference = trace_norm(&(&spec.apply(&sigma) - &spec.base.apply(&sigma)));
    Ok(FalsifierReport {
        interior_deviation,
        sigma_difference,
        hat_residual: conservativity_residual(spec, &spec.rho_hat, opts.t)?,
        base_defect: conservativity_defect(&rates, opts.lambda, &spec.rho_hat)?,
    })
}

/// Sum of up to three rank-one terms `|phi><psi|` with vectors on levels `< N - 1`.
fn random_interior_finite_rank(rng: &mut ChaCha8Rng, n: usize) -> TruncatedOperator {
    let support = rng.random_range(1..n);
    let rank = rng.random_range(1..=3);
    let mut out = TruncatedOperator::zeros(n);
    let entry = |rng: &mut ChaCha8Rng| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    for _ in 0..rank {
        let phi: Vec<C64> = (0..support).map(|_| entry(rng)).collect();
        let psi: Vec<C64> = (0..support).map(|_| entry(rng)).collect();
        for i in 0..support {
            for j in 0..support {
                out.set(i, j, out.get(i, j) + phi[i] * psi[j].conj());
            }
        }
    }
    out
}
