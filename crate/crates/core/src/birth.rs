//! The quantum birth process on `l^2(N)`.
//!
//! `K|n> = -mu_n/2 |n>` and a single jump `L|n> = sqrt(mu_n) |n+1>`. On a
//! truncation to `N` levels the jump out of the top level is cut, so the
//! closed-form resolvent is exact on every represented entry: inflow only
//! moves matrix elements from `(n-1, m-1)` to `(n, m)`.
//!
//! Products of many rate factors are formed in log space, so geometric
//! rates can be probed far beyond the range where `mu_n` itself overflows.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::minimal::DenseResolvent;
use crate::operator::{SuperOperator, TruncatedOperator, C64};
use crate::rates::{RateSequence, TailBound};
use crate::standard::StandardGeneratorSpec;

const LN_2: f64 = std::f64::consts::LN_2;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")))
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Log-rates cached on demand, with the resolvent factors built from them.
struct LogRates<'a> {
    rates: &'a RateSequence,
    ln_mu: Vec<f64>,
}

impl<'a> LogRates<'a> {
    fn new(rates: &'a RateSequence) -> Self {
        Self {
            rates,
            ln_mu: Vec::new(),
        }
    }

    fn get(&mut self, n: usize) -> Result<f64> {
        while self.ln_mu.len() <= n {
            let k = self.ln_mu.len();
            self.ln_mu.push(self.rates.ln_mu(k)?);
        }
        Ok(self.ln_mu[n])
    }

    /// `ln(lambda + (mu_a + mu_b) / 2)`
    fn ln_denominator(&mut self, lambda: f64, a: usize, b: usize) -> Result<f64> {
        let (la, lb) = (self.get(a)?, self.get(b)?);
        Ok(log_sum_exp(&[lambda.ln(), la - LN_2, lb - LN_2]))
    }

    /// `ln( sqrt(mu_a mu_b) / (lambda + (mu_a + mu_b) / 2) )`
    fn ln_factor(&mut self, lambda: f64, a: usize, b: usize) -> Result<f64> {
        let half = 0.5 * (self.get(a)? + self.get(b)?);
        Ok(half - self.ln_denominator(lambda, a, b)?)
    }

    /// `ln((mu_a + mu_b) / 2)`
    fn ln_half_sum(&mut self, a: usize, b: usize) -> Result<f64> {
        let (la, lb) = (self.get(a)?, self.get(b)?);
        Ok(log_sum_exp(&[la - LN_2, lb - LN_2]))
    }
}

/// Read access to matrix elements `<n|rho|m>` of a possibly unrepresented operator.
pub trait MatrixElements {
    fn element(&self, n: usize, m: usize) -> Result<C64>;
}

impl MatrixElements for TruncatedOperator {
    fn element(&self, n: usize, m: usize) -> Result<C64> {
        let limit = self.dim();
        if n >= limit || m >= limit {
            return Err(Error::OutOfRange {
                index: n.max(m),
                limit,
            });
        }
        Ok(self.get(n, m))
    }
}

/// A finite-rank operator: zero outside its represented block.
pub struct FiniteSupport<'a>(pub &'a TruncatedOperator);

impl MatrixElements for FiniteSupport<'_> {
    fn element(&self, n: usize, m: usize) -> Result<C64> {
        let d = self.0.dim();
        Ok(if n < d && m < d { self.0.get(n, m) } else { C64::new(0.0, 0.0) })
    }
}

/// `sigma^q = sum_n 2 / (mu_n + mu_{n+q}) |n><n+q|`, evaluated lazily.
pub struct SigmaBand<'a> {
    pub rates: &'a RateSequence,
    pub q: usize,
}

impl MatrixElements for SigmaBand<'_> {
    fn element(&self, n: usize, m: usize) -> Result<C64> {
        if m != n + self.q {
            return Ok(C64::new(0.0, 0.0));
        }
        Ok(C64::new(2.0 / (self.rates.mu(n)? + self.rates.mu(m)?), 0.0))
    }
}

/// Entries of `R_lambda rho'` for a finite-rank `rho'`, from the closed form.
pub struct ResolventElements<'a> {
    pub rates: &'a RateSequence,
    pub lambda: f64,
    pub rho: &'a TruncatedOperator,
}

impl MatrixElements for ResolventElements<'_> {
    fn element(&self, n: usize, m: usize) -> Result<C64> {
        let mut lr = LogRates::new(self.rates);
        closed_entry(&mut lr, self.lambda, self.rho, n, m, false)
    }
}

/// `sum_k p^k_{nm} <n-k|rho|m-k>`, scaled by `1/(lambda + (mu_n + mu_m)/2)`
/// or, when `normalized`, by `((mu_n + mu_m)/2) / (lambda + (mu_n + mu_m)/2)`.
fn closed_entry(
    lr: &mut LogRates<'_>,
    lambda: f64,
    rho: &TruncatedOperator,
    n: usize,
    m: usize,
    normalized: bool,
) -> Result<C64> {
    let d = rho.dim();
    let kmax = n.min(m);
    // only k with n-k < d and m-k < d see a nonzero rho entry
    let kmin = n.max(m).saturating_sub(d - 1);
    if kmin > kmax {
        return Ok(C64::new(0.0, 0.0));
    }
    let ln_pref = if normalized {
        lr.ln_half_sum(n, m)? - lr.ln_denominator(lambda, n, m)?
    } else {
        -lr.ln_denominator(lambda, n, m)?
    };
    let mut ln_p: f64 = 0.0;
    for j in 1..=kmin {
        ln_p += lr.ln_factor(lambda, n - j, m - j)?;
    }
    let mut acc = C64::new(0.0, 0.0);
    for k in kmin..=kmax {
        if k > kmin {
            ln_p += lr.ln_factor(lambda, n - k, m - k)?;
        }
        let z = rho.get(n - k, m - k);
        if z != C64::new(0.0, 0.0) {
            acc += z * (ln_pref + ln_p).exp();
        }
    }
    Ok(acc)
}

/// Truncated generator: `K = diag(-mu_n/2)`, `L[n+1][n] = sqrt(mu_n)` for `n <= N-2`.
pub fn qb_spec(rates: &RateSequence, n: usize) -> Result<StandardGeneratorSpec> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need N >= 2, got {n}")));
    }
    let mu = rates.first(n)?;
    let k = TruncatedOperator::from_real_diagonal(&mu.iter().map(|m| -0.5 * m).collect::<Vec<_>>());
    let mut l = TruncatedOperator::zeros(n);
    for i in 0..n - 1 {
        l.set(i + 1, i, C64::new(mu[i].sqrt(), 0.0));
    }
    StandardGeneratorSpec::new(k, vec![l])
}

/// Classical generator `(Gp)(n) = mu_{n-1} p(n-1) - mu_n p(n)` on `N` levels.
///
/// Outflow from the top level is kept; inflow into level `N` is dropped.
pub fn classical_birth_apply(rates: &RateSequence, p: &[f64]) -> Result<Vec<f64>> {
    let mu = rates.first(p.len())?;
    Ok((0..p.len())
        .map(|n| {
            let inflow = if n > 0 { mu[n - 1] * p[n - 1] } else { 0.0 };
            inflow - mu[n] * p[n]
        })
        .collect())
}

/// Closed-form minimal resolvent, exact on the truncation.
pub fn qb_resolvent_closed(rates: &RateSequence, lambda: f64, rho: &TruncatedOperator) -> Result<TruncatedOperator> {
    check_lambda(lambda)?;
    let n = rho.dim();
    let mut lr = LogRates::new(rates);
    lr.get(n - 1)?;
    let mut out = TruncatedOperator::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, closed_entry(&mut lr, lambda, rho, i, j, false)?);
        }
    }
    Ok(out)
}

/// Entrywise `-1/2 (mu_n + mu_m) A_nm + sqrt(mu_{n-1} mu_{m-1}) A_{n-1,m-1}` for any matrix.
pub fn qb_gen_sharp(rates: &RateSequence, a: &TruncatedOperator) -> Result<TruncatedOperator> {
    let n = a.dim();
    let mu = rates.first(n)?;
    Ok(gen_sharp_with(&mu, a))
}

fn gen_sharp_with(mu: &[f64], a: &TruncatedOperator) -> TruncatedOperator {
    let n = a.dim();
    TruncatedOperator::from_fn(n, |i, j| {
        let mut z = a.get(i, j) * (-0.5 * (mu[i] + mu[j]));
        if i > 0 && j > 0 {
            z += a.get(i - 1, j - 1) * (mu[i - 1] * mu[j - 1]).sqrt();
        }
        z
    })
}

/// The birth generator on `N` levels as a map.
#[derive(Clone, Debug)]
pub struct BirthGenerator {
    mu: Vec<f64>,
}

impl BirthGenerator {
    pub fn new(rates: &RateSequence, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("need N >= 1".into()));
        }
        Ok(Self { mu: rates.first(n)? })
    }

    pub fn rates(&self) -> &[f64] {
        &self.mu
    }
}

impl SuperOperator for BirthGenerator {
    fn dim(&self) -> usize {
        self.mu.len()
    }
    fn apply(&self, rho: &TruncatedOperator) -> TruncatedOperator {
        assert_eq!(rho.dim(), self.mu.len(), "dimension mismatch");
        gen_sharp_with(&self.mu, rho)
    }
    /// The inflow telescopes, leaving only the loss out of the top level.
    fn trace_of_image(&self, rho: &TruncatedOperator) -> C64 {
        let top = self.mu.len() - 1;
        rho.get(top, top) * -self.mu[top]
    }
}

/// Laplace transform of the arrival-at-infinity density, with a rigorous bracket.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrivalLaplace {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Number of factors multiplied.
    pub factors: usize,
    /// The explicit rate list ran out; the lower bound is then 0.
    pub list_exhausted: bool,
}

impl ArrivalLaplace {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

const ARRIVAL_FACTOR_CAP: usize = 50_000_000;

/// `prod_{j >= n_start} 1 / (1 + lambda / mu_j)`.
///
/// Stops once `lambda / mu_J < tail_tol` and `lambda * sum_{j >= J} 1/mu_j <
/// tail_tol`. The partial product is an upper bound; multiplying by
/// `exp(-lambda * tail)` gives a lower one. Divergent reciprocal sums give
/// exactly 0.
pub fn arrival_laplace(rates: &RateSequence, lambda: f64, n_start: usize, tail_tol: f64) -> Result<ArrivalLaplace> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(ArrivalLaplace {
            value: 1.0,
            lower: 1.0,
            upper: 1.0,
            factors: 0,
            list_exhausted: false,
        });
    }
    if rates.tail_reciprocal_sum(n_start) == TailBound::Divergent {
        return Ok(ArrivalLaplace {
            value: 0.0,
            lower: 0.0,
            upper: 0.0,
            factors: 0,
            list_exhausted: false,
        });
    }
    let mut ln_p: f64 = 0.0;
    let mut j = n_start;
    loop {
        if let Some(len) = rates.len_limit() {
            if j >= len {
                let last = if j > n_start { lambda / rates.mu(j - 1)? } else { f64::INFINITY };
                if last >= tail_tol {
                    return Err(Error::Precondition(format!(
                        "explicit rate list ends at {len} with lambda/mu = {last:e}; tail not negligible"
                    )));
                }
                let upper = ln_p.exp();
                return Ok(ArrivalLaplace {
                    value: upper,
                    lower: 0.0,
                    upper,
                    factors: j - n_start,
                    list_exhausted: true,
                });
            }
        }
        if let TailBound::Finite(tail) = rates.tail_reciprocal_sum(j) {
            let x = (lambda.ln() - rates.ln_mu(j)?).exp();
            if x < tail_tol && lambda * tail < tail_tol {
                let upper = ln_p.exp();
                return Ok(ArrivalLaplace {
                    value: upper,
                    lower: upper * (-lambda * tail).exp(),
                    upper,
                    factors: j - n_start,
                    list_exhausted: false,
                });
            }
        }
        ln_p -= (lambda.ln() - rates.ln_mu(j)?).exp().ln_1p();
        j += 1;
        if j - n_start > ARRIVAL_FACTOR_CAP {
            return Err(Error::NotConverged {
                iterations: ARRIVAL_FACTOR_CAP,
            });
        }
    }
}

/// `prod_{j = n_start}^{n_start + count - 1} 1 / (1 + lambda / mu_j)`.
pub fn arrival_partial_product(rates: &RateSequence, lambda: f64, n_start: usize, count: usize) -> Result<f64> {
    let mut ln_p: f64 = 0.0;
    for j in n_start..n_start + count {
        ln_p -= (lambda.ln() - rates.ln_mu(j)?).exp().ln_1p();
    }
    Ok(ln_p.exp())
}

/// `1 - lambda tr R_lambda rho` on the truncation given by `rho`'s dimension.
pub fn conservativity_defect(rates: &RateSequence, lambda: f64, rho: &TruncatedOperator) -> Result<f64> {
    check_lambda(lambda)?;
    let tr = rho.trace();
    if !rho.is_self_adjoint() || (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::Precondition("rho must be self-adjoint with trace 1".into()));
    }
    let mut lr = LogRates::new(rates);
    let mut s = 0.0;
    for n in 0..rho.dim() {
        s += closed_entry(&mut lr, lambda, rho, n, n, false)?.re;
    }
    Ok(1.0 - lambda * s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiEstimate {
    /// `F(n_probe)`
    pub estimate: C64,
    /// `F(n_probe / 2)`
    pub half_probe: C64,
    pub converged: bool,
}

/// Default tolerance for the probe-doubling convergence test.
pub const PHI_TOL: f64 = 1e-2;

/// `F(n) = 1/2 (mu_n + mu_{n+q}) <n|rho|n+q>`, probed at `n_probe` and `n_probe / 2`.
pub fn phi_q<E: MatrixElements + ?Sized>(
    rates: &RateSequence,
    rho: &E,
    q: i64,
    n_probe: usize,
    tol: f64,
) -> Result<PhiEstimate> {
    let f = |n: usize| -> Result<C64> {
        let m = n as i64 + q;
        if m < 0 {
            return Err(Error::InvalidArgument(format!("probe {n} with shift {q} leaves the index range")));
        }
        let m = m as usize;
        Ok(rho.element(n, m)? * (0.5 * (rates.mu(n)? + rates.mu(m)?)))
    };
    let estimate = f(n_probe)?;
    let half_probe = f(n_probe / 2)?;
    Ok(PhiEstimate {
        estimate,
        half_probe,
        converged: (estimate - half_probe).norm() < tol,
    })
}

/// Band matrix `sigma^q` on `N` levels.
pub fn sigma_q(rates: &RateSequence, q: usize, n: usize) -> Result<TruncatedOperator> {
    if n == 0 {
        return Err(Error::InvalidArgument("need N >= 1".into()));
    }
    rates.mu(n - 1 + q)?;
    let band = SigmaBand { rates, q };
    let mut out = TruncatedOperator::zeros(n);
    for i in 0..n.saturating_sub(q) {
        out.set(i, i + q, band.element(i, i + q)?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthWitness {
    pub q: usize,
    pub n: usize,
    /// `|1 - mu_{n+q} / mu_n|`
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    pub moderate: bool,
    /// `c_of_q[q] = max_{1 <= n <= n_max} n |1 - mu_{n+q}/mu_n|`.
    pub c_of_q: BTreeMap<usize, f64>,
    /// Maximum over all probed `q`.
    pub uniform_c: f64,
    pub witness: Option<GrowthWitness>,
}

/// Probes `|1 - mu_{n+q}/mu_n| <= c/n`.
///
/// A shift `q` passes when the maximum of `n |1 - mu_{n+q}/mu_n|` over the
/// last decade `(n_max/10, n_max]` is within 5% of the maximum below it.
pub fn moderate_growth_check(rates: &RateSequence, q_max: usize, n_max: usize) -> Result<GrowthReport> {
    if n_max < 10 {
        return Err(Error::InvalidArgument(format!("need n_max >= 10, got {n_max}")));
    }
    rates.mu(n_max + q_max)?;
    let split = n_max / 10;
    let mut c_of_q = BTreeMap::new();
    let mut moderate = true;
    let mut witness = None;
    for q in 0..=q_max {
        let mut early: f64 = 0.0;
        let mut late: f64 = 0.0;
        let mut late_at = split + 1;
        for n in 1..=n_max {
            let dev = (1.0 - (rates.ln_mu(n + q)? - rates.ln_mu(n)?).exp()).abs();
            let v = n as f64 * dev;
            if n <= split {
                early = early.max(v);
            } else if v > late {
                late = v;
                late_at = n;
            }
        }
        c_of_q.insert(q, early.max(late));
        if late > 1.05 * early && late > 0.0 {
            moderate = false;
            if witness.is_none() {
                let dev = (1.0 - (rates.ln_mu(late_at + q)? - rates.ln_mu(late_at)?).exp()).abs();
                witness = Some(GrowthWitness {
                    q,
                    n: late_at,
                    deviation: dev,
                });
            }
        }
    }
    let uniform_c = c_of_q.values().copied().fold(0.0, f64::max);
    Ok(GrowthReport {
        moderate,
        c_of_q,
        uniform_c,
        witness,
    })
}

/// `(sqrt(a) - sqrt(b))^2 / (a + b)`.
pub fn g_ratio(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument(format!("arguments must be > 0, got {a}, {b}")));
    }
    let d = a.sqrt() - b.sqrt();
    Ok(d * d / (a + b))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayRow {
    pub n: usize,
    /// `1/2 (mu_n + mu_{n+q}) |<n|R_lambda rho|n+q>|`
    pub value: f64,
    /// `sum_{k <= n} gamma^k r_{n-k}`, `r_j = |<j|rho|j+q>|`
    pub envelope: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayTable {
    /// `2 a^{q/2} / (1 + a^q)`
    pub gamma: f64,
    pub rows: Vec<DecayRow>,
}

/// Decay of the band functional on resolvent images for `mu_n = a^n`.
pub fn phi_decay_exponential(
    a: f64,
    q: usize,
    lambda: f64,
    rho: &TruncatedOperator,
    n_list: &[usize],
) -> Result<DecayTable> {
    check_lambda(lambda)?;
    if q == 0 {
        return Err(Error::InvalidArgument("band shift q must be >= 1".into()));
    }
    let rates = RateSequence::geometric(a)?;
    let qf = q as f64;
    let gamma = 2.0 * (0.5 * qf * a.ln()).exp() / (1.0 + (qf * a.ln()).exp());
    let r = |j: usize| -> f64 {
        if j + q < rho.dim() {
            rho.get(j, j + q).norm()
        } else {
            0.0
        }
    };
    let mut lr = LogRates::new(&rates);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let value = closed_entry(&mut lr, lambda, rho, n, n + q, true)?.norm();
        let envelope = (0..=n.min(rho.dim()))
            .map(|j| gamma.powi((n - j) as i32) * r(j))
            .sum();
        rows.push(DecayRow { n, value, envelope });
    }
    Ok(DecayTable { gamma, rows })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankOneReport {
    /// Smallest index with `rho|m> != 0`.
    pub column: usize,
    pub max_deviation: f64,
}

/// Checks `R_lambda rho |m> = (lambda + mu_m/2 - K)^{-1} rho |m>` for the first nonzero column.
///
/// The resolvent is computed by a dense solve of the truncated generator,
/// independently of the closed form.
pub fn rankone_domain_check(rates: &RateSequence, lambda: f64, rho: &TruncatedOperator) -> Result<RankOneReport> {
    check_lambda(lambda)?;
    let n = rho.dim();
    let m = (0..n)
        .find(|&c| (0..n).any(|r| rho.get(r, c) != C64::new(0.0, 0.0)))
        .ok_or_else(|| Error::InvalidArgument("rho must be nonzero".into()))?;
    let spec = qb_spec(rates, n)?;
    let r = DenseResolvent::new(&spec, lambda)?.apply(rho)?;
    let mu = rates.first(n)?;
    let max_deviation = (0..n)
        .map(|i| (r.get(i, m) - rho.get(i, m) / (lambda + 0.5 * (mu[i] + mu[m]))).norm())
        .fold(0.0, f64::max);
    Ok(RankOneReport { column: m, max_deviation })
}
