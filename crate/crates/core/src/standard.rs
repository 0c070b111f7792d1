//! Generators in standard form, `G rho = K rho + rho K* + sum_a L_a rho L_a*`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::operator::{hermitian_eigenvalues, SuperOperator, TruncatedOperator, C64};

/// Truncated no-event generator `K` and jump operators `L_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardGeneratorSpec {
    k: TruncatedOperator,
    jumps: Vec<TruncatedOperator>,
}

impl StandardGeneratorSpec {
    pub fn new(k: TruncatedOperator, jumps: Vec<TruncatedOperator>) -> Result<Self> {
        for l in &jumps {
            if l.dim() != k.dim() {
                return Err(Error::DimensionMismatch {
                    expected: k.dim(),
                    found: l.dim(),
                });
            }
        }
        Ok(Self { k, jumps })
    }

    /// `K = -1/2 sum L*L`, the conservative choice.
    pub fn conservative(jumps: Vec<TruncatedOperator>) -> Result<Self> {
        let dim = jumps
            .first()
            .map(TruncatedOperator::dim)
            .ok_or_else(|| Error::InvalidArgument("at least one jump required".into()))?;
        let mut k = TruncatedOperator::zeros(dim);
        for l in &jumps {
            if l.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: l.dim(),
                });
            }
            k = &k - &l.adjoint().compose(l).scale_real(0.5);
        }
        Ok(Self { k, jumps })
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    pub fn k(&self) -> &TruncatedOperator {
        &self.k
    }

    pub fn jumps(&self) -> &[TruncatedOperator] {
        &self.jumps
    }

    fn check(&self, rho: &TruncatedOperator) -> Result<()> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        Ok(())
    }

    /// The no-event part as a map.
    pub fn no_event(&self) -> NoEventPart<'_> {
        NoEventPart(self)
    }

    /// The completely positive jump part as a map.
    pub fn jump(&self) -> JumpPart<'_> {
        JumpPart(self)
    }
}

impl SuperOperator for StandardGeneratorSpec {
    fn dim(&self) -> usize {
        self.k.dim()
    }
    fn apply(&self, rho: &TruncatedOperator) -> TruncatedOperator {
        apply_standard(self, rho).expect("dimension mismatch")
    }
}

pub struct NoEventPart<'a>(&'a StandardGeneratorSpec);

impl SuperOperator for NoEventPart<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, rho: &TruncatedOperator) -> TruncatedOperator {
        apply_no_event(self.0, rho).expect("dimension mismatch")
    }
}

pub struct JumpPart<'a>(&'a StandardGeneratorSpec);

impl SuperOperator for JumpPart<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, rho: &TruncatedOperator) -> TruncatedOperator {
        apply_jump(self.0, rho).expect("dimension mismatch")
    }
}

/// `K rho + rho K*`.
pub fn apply_no_event(spec: &StandardGeneratorSpec, rho: &TruncatedOperator) -> Result<TruncatedOperator> {
    spec.check(rho)?;
    Ok(&spec.k.compose(rho) + &rho.compose(&spec.k.adjoint()))
}

/// `sum_a L_a rho L_a*`.
pub fn apply_jump(spec: &StandardGeneratorSpec, rho: &TruncatedOperator) -> Result<TruncatedOperator> {
    spec.check(rho)?;
    let mut out = TruncatedOperator::zeros(spec.dim());
    for l in &spec.jumps {
        out = &out + &l.compose(rho).compose(&l.adjoint());
    }
    Ok(out)
}

pub fn apply_standard(spec: &StandardGeneratorSpec, rho: &TruncatedOperator) -> Result<TruncatedOperator> {
    Ok(&apply_no_event(spec, rho)? + &apply_jump(spec, rho)?)
}

/// `D = K + K* + sum_a L_a* L_a`; the form is admissible when `D <= 0`.
pub fn dissipativity_check(spec: &StandardGeneratorSpec) -> TruncatedOperator {
    let mut d = &spec.k + &spec.k.adjoint();
    for l in &spec.jumps {
        d = &d + &l.adjoint().compose(l);
    }
    d
}

/// Largest eigenvalue of the leading `levels x levels` block of `D`.
pub fn max_dissipativity_eigenvalue(spec: &StandardGeneratorSpec, levels: usize) -> Result<f64> {
    let d = dissipativity_check(spec);
    let levels = levels.min(spec.dim());
    let block = TruncatedOperator::from_fn(levels, |i, j| d.get(i, j));
    Ok(*hermitian_eigenvalues(&block)?.last().expect("nonempty"))
}

/// Gauge change `L'_a = L_a + l_a I`, `K' = K - sum_a conj(l_a) L_a - 1/2 (i beta + sum_a |l_a|^2) I`.
///
/// The minus signs are the ones that leave the generator unchanged.
pub fn gauge_transform(spec: &StandardGeneratorSpec, lambdas: &[C64], beta: f64) -> Result<StandardGeneratorSpec> {
    if lambdas.len() != spec.jumps.len() {
        return Err(Error::DimensionMismatch {
            expected: spec.jumps.len(),
            found: lambdas.len(),
        });
    }
    let n = spec.dim();
    let id = TruncatedOperator::identity(n);
    let mut k = spec.k.clone();
    let mut jumps = Vec::with_capacity(lambdas.len());
    let mut sq = 0.0;
    for (l, &lam) in spec.jumps.iter().zip(lambdas) {
        jumps.push(l + &id.scale(lam));
        k = &k - &l.scale(lam.conj());
        sq += lam.norm_sqr();
    }
    k = &k - &id.scale(C64::new(0.5 * sq, 0.5 * beta));
    StandardGeneratorSpec::new(k, jumps)
}

fn inner(a: &DVector<C64>, b: &DVector<C64>) -> C64 {
    a.dotc(b)
}

/// `|<f|(G w) g> - <K* f|w g> - <f|w K* g> - sum_a <L_a* f|w L_a* g>|`.
pub fn forward_form_residual(
    spec: &StandardGeneratorSpec,
    omega: &TruncatedOperator,
    f: &[C64],
    g: &[C64],
) -> Result<f64> {
    let n = spec.dim();
    for len in [f.len(), g.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    let f = DVector::from_column_slice(f);
    let g = DVector::from_column_slice(g);
    let lhs = inner(&f, &apply_standard(spec, omega)?.apply_vector(&g));
    let kstar = spec.k.adjoint();
    let mut rhs = inner(&kstar.apply_vector(&f), &omega.apply_vector(&g))
        + inner(&f, &omega.apply_vector(&kstar.apply_vector(&g)));
    for l in &spec.jumps {
        let ls = l.adjoint();
        rhs += inner(&ls.apply_vector(&f), &omega.apply_vector(&ls.apply_vector(&g)));
    }
    Ok((lhs - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{choi_matrix, is_positive_semidefinite, trace_norm};

    fn ladder(n: usize, mu: impl Fn(usize) -> f64) -> StandardGeneratorSpec {
        let k = TruncatedOperator::from_real_diagonal(&(0..n).map(|i| -0.5 * mu(i)).collect::<Vec<_>>());
        let mut l = TruncatedOperator::zeros(n);
        for i in 0..n - 1 {
            l.set(i + 1, i, C64::new(mu(i).sqrt(), 0.0));
        }
        StandardGeneratorSpec::new(k, vec![l]).unwrap()
    }

    #[test]
    fn zero_generator_and_empty_jumps() {
        let spec = StandardGeneratorSpec::new(TruncatedOperator::zeros(3), vec![]).unwrap();
        let rho = TruncatedOperator::identity(3);
        assert_eq!(apply_no_event(&spec, &rho).unwrap(), TruncatedOperator::zeros(3));
        assert_eq!(apply_jump(&spec, &rho).unwrap(), TruncatedOperator::zeros(3));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let spec = ladder(3, |n| n as f64 + 1.0);
        assert!(apply_standard(&spec, &TruncatedOperator::zeros(2)).is_err());
        assert!(StandardGeneratorSpec::new(TruncatedOperator::zeros(2), vec![TruncatedOperator::zeros(3)]).is_err());
        assert!(gauge_transform(&spec, &[], 0.0).is_err());
    }

    #[test]
    fn ladder_dissipativity_diagonal() {
        let mu = |n: usize| (n as f64 + 1.0).powi(2);
        let spec = ladder(5, mu);
        let d = dissipativity_check(&spec);
        for n in 0..4 {
            assert!(d.get(n, n).norm() < 1e-14);
        }
        assert!((d.get(4, 4).re + mu(4)).abs() < 1e-12);
    }

    #[test]
    fn conservative_k_gives_zero_dissipation() {
        let l = TruncatedOperator::from_fn(3, |i, j| C64::new((i + 2 * j) as f64 * 0.1, (i as f64) - (j as f64)));
        let spec = StandardGeneratorSpec::conservative(vec![l]).unwrap();
        assert!(dissipativity_check(&spec).max_abs() < 1e-14);
    }

    #[test]
    fn jump_part_is_completely_positive() {
        let spec = ladder(4, |n| 1.0 + n as f64);
        let choi = choi_matrix(&spec.jump(), 4).unwrap();
        assert!(is_positive_semidefinite(&choi, 1e-10).unwrap());
        let ch0 = choi_matrix(&spec.no_event(), 4).unwrap();
        assert!(!is_positive_semidefinite(&ch0, 1e-10).unwrap());
    }

    #[test]
    fn identity_gauge_is_noop() {
        let spec = ladder(4, |n| 1.0 + n as f64);
        let same = gauge_transform(&spec, &[C64::new(0.0, 0.0)], 0.0).unwrap();
        assert_eq!(same, spec);
    }

    #[test]
    fn forward_residual_trivial_cases() {
        let spec = ladder(4, |n| 2.0 + n as f64);
        let f = vec![C64::new(1.0, 0.3); 4];
        let z = vec![C64::new(0.0, 0.0); 4];
        let w = TruncatedOperator::unit(4, 1, 2);
        assert_eq!(forward_form_residual(&spec, &TruncatedOperator::zeros(4), &f, &f).unwrap(), 0.0);
        assert_eq!(forward_form_residual(&spec, &w, &z, &f).unwrap(), 0.0);
        assert_eq!(forward_form_residual(&spec, &w, &f, &z).unwrap(), 0.0);
    }

    #[test]
    fn jump_dominated_by_no_event_on_interior() {
        let spec = ladder(6, |n| (n as f64 + 1.0).powi(2));
        let phi: Vec<C64> = (0..6).map(|i| if i < 5 { C64::new(1.0 / (i + 1) as f64, 0.2 * i as f64) } else { C64::new(0.0, 0.0) }).collect();
        let rho = crate::operator::rank_one(&phi, &phi).unwrap();
        let j = trace_norm(&apply_jump(&spec, &rho).unwrap());
        let g0 = trace_norm(&apply_no_event(&spec, &rho).unwrap());
        assert!(j <= g0 + 1e-9, "{j} > {g0}");
    }
}
