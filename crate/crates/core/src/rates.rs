//! Birth-rate sequences `mu_n`.

use crate::error::{Error, Result};

/// Rate out of level `n` into level `n + 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum RateSequence {
    /// `mu_n = c (n + 1)^p`
    Polynomial { c: f64, p: f64 },
    /// `mu_n = a^n`
    Geometric { a: f64 },
    /// `mu_n = c`
    Constant { c: f64 },
    /// A finite list; queries past its end are errors.
    Explicit(Vec<f64>),
}

/// Upper bound on `sum_{j >= start} 1 / mu_j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailBound {
    Finite(f64),
    Divergent,
    Unknown,
}

impl RateSequence {
    pub fn polynomial(c: f64, p: f64) -> Result<Self> {
        positive("c", c)?;
        if !p.is_finite() {
            return Err(Error::InvalidArgument(format!("exponent must be finite, got {p}")));
        }
        Ok(Self::Polynomial { c, p })
    }

    pub fn geometric(a: f64) -> Result<Self> {
        positive("a", a)?;
        Ok(Self::Geometric { a })
    }

    pub fn constant(c: f64) -> Result<Self> {
        positive("c", c)?;
        Ok(Self::Constant { c })
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("explicit rate list is empty".into()));
        }
        for &v in &values {
            positive("rate", v)?;
        }
        Ok(Self::Explicit(values))
    }

    pub fn mu(&self, n: usize) -> Result<f64> {
        let v = match self {
            Self::Polynomial { c, p } => c * (n as f64 + 1.0).powf(*p),
            Self::Geometric { a } => a.powi(n as i32),
            Self::Constant { c } => *c,
            Self::Explicit(list) => {
                return list.get(n).copied().ok_or(Error::RateOutOfRange {
                    index: n,
                    len: list.len(),
                })
            }
        };
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::InvalidArgument(format!("rate mu_{n} underflowed to {v}")))
        }
    }

    /// `ln mu_n`, finite even where `mu_n` itself overflows.
    pub fn ln_mu(&self, n: usize) -> Result<f64> {
        match self {
            Self::Polynomial { c, p } => Ok(c.ln() + p * (n as f64 + 1.0).ln()),
            Self::Geometric { a } => Ok(n as f64 * a.ln()),
            _ => Ok(self.mu(n)?.ln()),
        }
    }

    /// `mu_0 .. mu_{n-1}`.
    pub fn first(&self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|i| self.mu(i)).collect()
    }

    /// Number of represented rates, `None` for the infinite families.
    pub fn len_limit(&self) -> Option<usize> {
        match self {
            Self::Explicit(list) => Some(list.len()),
            _ => None,
        }
    }

    /// Rigorous bound on the tail `sum_{j >= start} 1 / mu_j`.
    pub fn tail_reciprocal_sum(&self, start: usize) -> TailBound {
        match *self {
            Self::Polynomial { c, p } => {
                if p <= 1.0 {
                    TailBound::Divergent
                } else {
                    // first term plus integral of the decreasing remainder
                    let s = start as f64 + 1.0;
                    TailBound::Finite((s.powf(-p) + s.powf(1.0 - p) / (p - 1.0)) / c)
                }
            }
            Self::Geometric { a } => {
                if a <= 1.0 {
                    TailBound::Divergent
                } else {
                    TailBound::Finite((-(start as f64) * a.ln()).exp() * a / (a - 1.0))
                }
            }
            Self::Constant { .. } => TailBound::Divergent,
            Self::Explicit(_) => TailBound::Unknown,
        }
    }

    /// Whether `sum 1/mu_n < infinity` (explosion in finite time), when decidable.
    pub fn explosive(&self) -> Option<bool> {
        match self.tail_reciprocal_sum(0) {
            TailBound::Finite(_) => Some(true),
            TailBound::Divergent => Some(false),
            TailBound::Unknown => None,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite and > 0, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families() {
        let p = RateSequence::polynomial(1.0, 2.0).unwrap();
        assert_eq!(p.mu(0).unwrap(), 1.0);
        assert_eq!(p.mu(3).unwrap(), 16.0);
        assert_eq!(RateSequence::geometric(2.0).unwrap().mu(2).unwrap(), 4.0);
        assert_eq!(RateSequence::constant(3.0).unwrap().mu(1000).unwrap(), 3.0);
        let e = RateSequence::explicit(vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(e.mu(2).unwrap(), 4.0);
        assert!(matches!(e.mu(3), Err(Error::RateOutOfRange { index: 3, len: 3 })));
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(RateSequence::polynomial(0.0, 1.0).is_err());
        assert!(RateSequence::geometric(-2.0).is_err());
        assert!(RateSequence::explicit(vec![]).is_err());
        assert!(RateSequence::explicit(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn tail_bounds_dominate_partial_sums() {
        let p = RateSequence::polynomial(1.0, 2.0).unwrap();
        let exact: f64 = (10..200_000).map(|j| 1.0 / p.mu(j).unwrap()).sum();
        match p.tail_reciprocal_sum(10) {
            TailBound::Finite(b) => assert!(b >= exact && b < exact * 1.1),
            other => panic!("{other:?}"),
        }
        let g = RateSequence::geometric(2.0).unwrap();
        assert_eq!(g.tail_reciprocal_sum(0), TailBound::Finite(2.0));
        assert_eq!(RateSequence::polynomial(1.0, 1.0).unwrap().explosive(), Some(false));
        assert_eq!(RateSequence::explicit(vec![1.0]).unwrap().explosive(), None);
    }

    #[test]
    fn log_rates_survive_overflow() {
        let g = RateSequence::geometric(2.0).unwrap();
        assert!((g.ln_mu(2000).unwrap() - 2000.0 * 2f64.ln()).abs() < 1e-9);
    }
}
