//! Monte Carlo paths of the classical birth process and the shift arrival demo.
//!
//! Each trajectory draws from its own ChaCha8 stream, addressed by
//! `(master_seed, index)`, so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::birth::qb_spec;
use crate::error::{Error, Result};
use crate::operator::{TruncatedOperator, C64};
use crate::rates::{RateSequence, TailBound};
use crate::standard::{apply_jump, StandardGeneratorSpec};

pub const DEFAULT_MAX_JUMPS: usize = 10_000;

/// Counter-addressable random streams derived from one master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngContract {
    pub master_seed: u64,
}

impl RngContract {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(index);
        rng
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySample {
    pub start: usize,
    /// Absolute jump times, strictly increasing.
    pub jump_times: Vec<f64>,
    pub final_level: usize,
    /// `max_jumps` jumps happened before the horizon.
    pub exploded_within_horizon: bool,
    pub horizon: f64,
}

impl TrajectorySample {
    /// Time of the last simulated jump when the path exploded.
    pub fn explosion_time(&self) -> Option<f64> {
        if self.exploded_within_horizon {
            self.jump_times.last().copied()
        } else {
            None
        }
    }

    pub fn jumps_before(&self, t: f64) -> usize {
        self.jump_times.partition_point(|&s| s <= t)
    }
}

/// One path from level `n_start`, with holding times `-ln(U) / mu_n`, `U` in `(0, 1]`.
pub fn sample_trajectory<R: Rng + ?Sized>(
    rates: &RateSequence,
    n_start: usize,
    horizon: f64,
    max_jumps: usize,
    rng: &mut R,
) -> Result<TrajectorySample> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be > 0, got {horizon}")));
    }
    if max_jumps == 0 {
        return Err(Error::InvalidArgument("max_jumps must be >= 1".into()));
    }
    let mut t = 0.0;
    let mut level = n_start;
    let mut jump_times = Vec::new();
    while jump_times.len() < max_jumps {
        let u = 1.0 - rng.random::<f64>();
        let next = t - u.ln() / rates.mu(level)?;
        if next > horizon {
            break;
        }
        // a holding time below the spacing of floats at `t` cannot be represented
        t = if next > t { next } else { f64::from_bits(t.to_bits() + 1) };
        jump_times.push(t);
        level += 1;
    }
    Ok(TrajectorySample {
        start: n_start,
        exploded_within_horizon: jump_times.len() == max_jumps,
        jump_times,
        final_level: level,
        horizon,
    })
}

/// Trajectories `0..count` of `contract`, in index order.
pub fn sample_many(
    rates: &RateSequence,
    n_start: usize,
    horizon: f64,
    max_jumps: usize,
    contract: RngContract,
    count: usize,
) -> Result<Vec<TrajectorySample>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| sample_trajectory(rates, n_start, horizon, max_jumps, &mut contract.stream(i)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub standard_error: f64,
}

fn mean_and_error(values: impl ExactSizeIterator<Item = f64>) -> Estimate {
    let n = values.len() as f64;
    let (mut sum, mut sq) = (0.0, 0.0);
    for v in values {
        sum += v;
        sq += v * v;
    }
    let mean = sum / n;
    let var = if n > 1.0 { ((sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Estimate {
        mean,
        standard_error: (var / n).sqrt(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceEstimate {
    pub mean: f64,
    pub standard_error: f64,
    /// Fraction of paths still running at the horizon; they contribute 0.
    pub censored_fraction: f64,
    /// `exp(-lambda horizon)`, the largest value a censored path could have had.
    pub censoring_bound: f64,
    /// `lambda sum_{j >= start + max_jumps} 1/mu_j`, bounding the truncation bias.
    pub truncation_bias: f64,
}

/// Mean of `exp(-lambda T)` over explosion times `T`.
///
/// Exploded paths use the time of their last simulated jump, which
/// underestimates `T` by at most the mean residual time. The estimate is
/// refused when that bias could exceed the standard error.
pub fn empirical_laplace(rates: &RateSequence, samples: &[TrajectorySample], lambda: f64) -> Result<LaplaceEstimate> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let horizon = samples.iter().map(|s| s.horizon).fold(f64::INFINITY, f64::min);
    let censored = samples.iter().filter(|s| !s.exploded_within_horizon).count();
    if lambda == 0.0 {
        return Ok(LaplaceEstimate {
            mean: 1.0,
            standard_error: 0.0,
            censored_fraction: censored as f64 / samples.len() as f64,
            censoring_bound: 1.0,
            truncation_bias: 0.0,
        });
    }
    let est = mean_and_error(
        samples
            .iter()
            .map(|s| s.explosion_time().map_or(0.0, |t| (-lambda * t).exp())),
    );
    let mut bias = 0.0;
    if let Some(s) = samples.iter().find(|s| s.exploded_within_horizon) {
        let reached = s.start + s.jump_times.len();
        bias = match rates.tail_reciprocal_sum(reached) {
            TailBound::Finite(tail) => lambda * tail,
            _ => f64::INFINITY,
        };
        if bias > est.standard_error {
            return Err(Error::BiasCheck {
                bias,
                standard_error: est.standard_error,
            });
        }
    }
    Ok(LaplaceEstimate {
        mean: est.mean,
        standard_error: est.standard_error,
        censored_fraction: censored as f64 / samples.len() as f64,
        censoring_bound: (-lambda * horizon).exp(),
        truncation_bias: bias,
    })
}

/// `tr R0 (P R0)^k rho` for the birth model on `N` levels: the Laplace
/// transform of the probability of having made exactly `k` jumps.
pub fn n_event_laplace_term(
    rates: &RateSequence,
    lambda: f64,
    k: usize,
    rho: &TruncatedOperator,
) -> Result<f64> {
    Ok(n_event_laplace_terms(rates, lambda, k, rho)?[k])
}

/// The terms `k = 0..=k_max` of [`n_event_laplace_term`].
pub fn n_event_laplace_terms(
    rates: &RateSequence,
    lambda: f64,
    k_max: usize,
    rho: &TruncatedOperator,
) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    let spec = qb_spec(rates, rho.dim())?;
    let r0 = |x: &TruncatedOperator| no_event_resolvent(&spec, lambda, x);
    let mut term = r0(rho);
    let mut out = vec![term.trace().re];
    for _ in 0..k_max {
        term = r0(&apply_jump(&spec, &term)?);
        out.push(term.trace().re);
    }
    Ok(out)
}

fn no_event_resolvent(spec: &StandardGeneratorSpec, lambda: f64, x: &TruncatedOperator) -> TruncatedOperator {
    let k = spec.k();
    TruncatedOperator::from_fn(x.dim(), |i, j| x.get(i, j) / (C64::new(lambda, 0.0) - k.get(i, i) - k.get(j, j).conj()))
}

/// Monte Carlo estimate of the `k`-event term from `(exp(-lambda T_k) - exp(-lambda T_{k+1})) / lambda`.
///
/// Paths that stop before `T_{k+1}` count it as infinite; this is exact for
/// censoring at the horizon up to `exp(-lambda horizon) / lambda`. Paths cut
/// by `max_jumps` before `k + 1` jumps are rejected.
pub fn n_event_estimate(samples: &[TrajectorySample], lambda: f64, k: usize) -> Result<Estimate> {
    if samples.is_empty() || !(lambda > 0.0) {
        return Err(Error::InvalidArgument("need samples and lambda > 0".into()));
    }
    let mut values = Vec::with_capacity(samples.len());
    for s in samples {
        if s.exploded_within_horizon && s.jump_times.len() <= k {
            return Err(Error::Precondition(format!("a path stopped after {} jumps", s.jump_times.len())));
        }
        let at = |i: usize| -> f64 {
            if i == 0 {
                1.0
            } else {
                s.jump_times.get(i - 1).map_or(0.0, |t| (-lambda * t).exp())
            }
        };
        values.push((at(k) - at(k + 1)) / lambda);
    }
    Ok(mean_and_error(values.into_iter()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftArrival {
    pub times: Vec<f64>,
    /// `|psi(t)|^2`, the arrival density at the origin.
    pub density: Vec<f64>,
    /// Trapezoid integral of the density up to each time.
    pub cumulative: Vec<f64>,
    /// Trapezoid `||psi||^2` over the grid.
    pub norm_sq: f64,
}

/// The left shift `(S_t psi)(x) = psi(x + t)` on the half-line sends the
/// amplitude at `t` across the origin at time `t`.
pub fn shift_arrival_density(psi: &[C64], h: f64) -> Result<ShiftArrival> {
    if psi.len() < 2 || !(h > 0.0) {
        return Err(Error::InvalidArgument("need at least two samples and h > 0".into()));
    }
    if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidArgument("psi must be finite".into()));
    }
    let density: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
    let mut cumulative = Vec::with_capacity(density.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for w in density.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        cumulative.push(acc);
    }
    Ok(ShiftArrival {
        times: (0..psi.len()).map(|i| i as f64 * h).collect(),
        norm_sq: acc,
        density,
        cumulative,
    })
}
