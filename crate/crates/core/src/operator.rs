//! Dense complex-matrix substrate.
//!
//! A [`TruncatedOperator`] is an `N x N` complex matrix whose entry `(n, m)`
//! is the matrix element `<n|rho|m>` of a trace-class operator cut to the
//! first `N` basis levels. Linear maps on these matrices implement
//! [`SuperOperator`]; vectorization is row-major, so the matrix unit
//! `E_{ij}` corresponds to the coordinate `i * N + j`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative tolerance used by [`TruncatedOperator::is_self_adjoint`].
pub const SELF_ADJOINT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedOperator {
    m: DMatrix<C64>,
}

impl TruncatedOperator {
    /// Wraps a square matrix, rejecting empty or non-finite input.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let z = m[(r, c)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: r, col: c });
                }
            }
        }
        Ok(Self { m })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    /// Matrix unit `E_{ij} = |i><j|`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(i, j)] = C64::new(1.0, 0.0);
        Self { m }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            m: DMatrix::from_fn(dim, dim, f),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Row-major complex entries.
    pub fn from_row_slice(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.m[(i, j)] = z;
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation `|A[n][m] - conj(A[m][n])|`.
    pub fn self_adjoint_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.self_adjoint_deviation() <= SELF_ADJOINT_TOL * self.max_abs().max(1.0)
    }

    /// True when every nonzero entry lies in the leading `levels x levels` block.
    pub fn is_supported_on(&self, levels: usize) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| (i < levels && j < levels) || self.m[(i, j)] == C64::new(0.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { m: &self.m * s }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            m: &self.m * &other.m,
        }
    }

    pub fn apply_vector(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.m * v
    }

    /// Row-major vectorization.
    pub fn to_vec(&self) -> DVector<C64> {
        let n = self.dim();
        DVector::from_fn(n * n, |k, _| self.m[(k / n, k % n)])
    }

    pub fn from_vec(dim: usize, v: &DVector<C64>) -> Self {
        assert_eq!(v.len(), dim * dim, "vector length");
        Self::from_fn(dim, |i, j| v[i * dim + j])
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            m: &self.m + &other.m,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            m: &self.m - &other.m,
        })
    }
}

impl Add for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn add(self, rhs: Self) -> TruncatedOperator {
        self.try_add(rhs).expect("dimension mismatch in operator sum")
    }
}

impl Sub for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn sub(self, rhs: Self) -> TruncatedOperator {
        self.try_sub(rhs).expect("dimension mismatch in operator difference")
    }
}

impl Neg for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn neg(self) -> TruncatedOperator {
        TruncatedOperator { m: -&self.m }
    }
}

impl Mul<f64> for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn mul(self, rhs: f64) -> TruncatedOperator {
        self.scale_real(rhs)
    }
}

/// A linear map on `dim x dim` truncated operators.
///
/// Implementations may panic when handed an operator of the wrong dimension;
/// the checked free functions of each module validate first.
pub trait SuperOperator {
    fn dim(&self) -> usize;
    fn apply(&self, rho: &TruncatedOperator) -> TruncatedOperator;

    /// `tr G(rho)`. Maps whose trace functional is known in closed form
    /// override this to avoid cancellation between large entries.
    fn trace_of_image(&self, rho: &TruncatedOperator) -> C64 {
        self.apply(rho).trace()
    }
}

impl<S: SuperOperator + ?Sized> SuperOperator for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, rho: &TruncatedOperator) -> TruncatedOperator {
        (**self).apply(rho)
    }
    fn trace_of_image(&self, rho: &TruncatedOperator) -> C64 {
        (**self).trace_of_image(rho)
    }
}

/// Adapts a closure into a [`SuperOperator`].
pub struct FnMap<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&TruncatedOperator) -> TruncatedOperator> FnMap<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&TruncatedOperator) -> TruncatedOperator> SuperOperator for FnMap<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, rho: &TruncatedOperator) -> TruncatedOperator {
        (self.f)(rho)
    }
}

/// The zero map.
pub struct ZeroMap(pub usize);

impl SuperOperator for ZeroMap {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, rho: &TruncatedOperator) -> TruncatedOperator {
        TruncatedOperator::zeros(rho.dim())
    }
}

/// Sum of singular values.
pub fn trace_norm(a: &TruncatedOperator) -> f64 {
    a.matrix().clone().singular_values().sum()
}

/// Eigenvalues of a self-adjoint operator, ascending.
pub fn hermitian_eigenvalues(a: &TruncatedOperator) -> Result<Vec<f64>> {
    if !a.is_self_adjoint() {
        return Err(Error::NotSelfAdjoint {
            deviation: a.self_adjoint_deviation(),
        });
    }
    let herm = (a.matrix() + a.matrix().adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// `min eigenvalue >= -tol * max(1, trace_norm(A))`.
pub fn is_positive_semidefinite(a: &TruncatedOperator, tol: f64) -> Result<bool> {
    let ev = hermitian_eigenvalues(a)?;
    let scale = trace_norm(a).max(1.0);
    Ok(ev[0] >= -tol * scale)
}

/// `|phi><psi|`, entries `phi[n] * conj(psi[m])`.
pub fn rank_one(phi: &[C64], psi: &[C64]) -> Result<TruncatedOperator> {
    if phi.len() != psi.len() {
        return Err(Error::DimensionMismatch {
            expected: phi.len(),
            found: psi.len(),
        });
    }
    if phi.is_empty() {
        return Err(Error::InvalidArgument("empty vectors".into()));
    }
    TruncatedOperator::new(DMatrix::from_fn(phi.len(), phi.len(), |n, m| {
        phi[n] * psi[m].conj()
    }))
}

/// Choi matrix of a map on `dim x dim` operators: block `(i, j)` is `map(E_ij)`.
pub fn choi_matrix<S: SuperOperator + ?Sized>(map: &S, dim: usize) -> Result<TruncatedOperator> {
    let mut choi = DMatrix::zeros(dim * dim, dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let out = map.apply(&TruncatedOperator::unit(dim, i, j));
            if out.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: out.dim(),
                });
            }
            for a in 0..dim {
                for b in 0..dim {
                    choi[(i * dim + a, j * dim + b)] = out.get(a, b);
                }
            }
        }
    }
    TruncatedOperator::new(choi)
}

/// Dense `N^2 x N^2` matrix of a map, column `i * N + j` holding `vec(map(E_ij))`.
pub fn superoperator_matrix<S: SuperOperator + ?Sized>(map: &S) -> Result<DMatrix<C64>> {
    let n = map.dim();
    let mut s = DMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let out = map.apply(&TruncatedOperator::unit(n, i, j));
            if out.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: out.dim(),
                });
            }
            let col = i * n + j;
            for a in 0..n {
                for b in 0..n {
                    s[(a * n + b, col)] = out.get(a, b);
                }
            }
        }
    }
    Ok(s)
}

const TAYLOR_CAP: usize = 80;

/// `exp(t G) rho`.
///
/// The dense superoperator is split into the connected components of its
/// coupling graph and each block touched by `rho` is exponentiated by
/// scaling and squaring with a truncated Taylor series. `tol` bounds the
/// Taylor remainder after squaring; it is floored at machine precision.
pub fn matrix_exponential_apply<S: SuperOperator + ?Sized>(
    g: &S,
    t: f64,
    rho: &TruncatedOperator,
    tol: f64,
) -> Result<TruncatedOperator> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
    }
    let n = g.dim();
    if rho.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho.dim(),
        });
    }
    if t == 0.0 {
        return Ok(rho.clone());
    }
    let s = superoperator_matrix(g)?;
    let v = rho.to_vec();
    let mut out = DVector::zeros(n * n);
    for comp in coupling_components(&s) {
        if comp.iter().all(|&k| v[k] == C64::new(0.0, 0.0)) {
            continue;
        }
        let b = comp.len();
        let block = DMatrix::from_fn(b, b, |r, c| s[(comp[r], comp[c])] * t);
        let e = expm_dense(&block, tol)?;
        let sub = DVector::from_fn(b, |r, _| v[comp[r]]);
        let res = e * sub;
        for (r, &k) in comp.iter().enumerate() {
            out[k] = res[r];
        }
    }
    TruncatedOperator::new(DMatrix::from_fn(n, n, |i, j| out[i * n + j]))
}

/// Weakly connected components of the nonzero pattern, each sorted.
fn coupling_components(s: &DMatrix<C64>) -> Vec<Vec<usize>> {
    let d = s.nrows();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for c in 0..d {
        for r in 0..d {
            if r != c && s[(r, c)] != C64::new(0.0, 0.0) {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for k in 0..d {
        let root = find(&mut parent, k);
        groups.entry(root).or_default().push(k);
    }
    groups.into_values().collect()
}

fn one_norm(a: &DMatrix<C64>) -> f64 {
    (0..a.ncols())
        .map(|c| a.column(c).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn expm_dense(a: &DMatrix<C64>, tol: f64) -> Result<DMatrix<C64>> {
    let d = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * C64::new(0.5f64.powi(squarings), 0.0);
    let threshold = (tol * 0.5f64.powi(squarings)).max(f64::EPSILON * 1e-3);
    // accumulate exp(B) - I and square as X -> 2X + X^2; keeping the offset
    // from the identity avoids losing the small diagonal decay rates
    let mut sum = DMatrix::zeros(d, d);
    let mut term = DMatrix::identity(d, d);
    let mut converged = false;
    for k in 1..=TAYLOR_CAP {
        term = &term * &scaled * C64::new(1.0 / k as f64, 0.0);
        sum += &term;
        if one_norm(&term) <= threshold * one_norm(&sum).max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            iterations: TAYLOR_CAP,
        });
    }
    for _ in 0..squarings {
        sum = &sum * C64::new(2.0, 0.0) + &sum * &sum;
    }
    Ok(sum + DMatrix::identity(d, d))
}
