//! Phase-space state and the counted acceleration field.

use std::cell::Cell;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Positions and velocities of a system `q'' = a(q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState<T> {
    pub q: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Real> PhaseState<T> {
    pub fn new(q: Vec<T>, v: Vec<T>) -> Result<Self> {
        if q.is_empty() || q.len() != v.len() {
            return Err(Error::InvalidParameter(format!(
                "q and v must have equal non-zero dimension (got {} and {})",
                q.len(),
                v.len()
            )));
        }
        let s = Self { q, v };
        if !s.is_finite() {
            return Err(Error::NonFinite("initial state".into()));
        }
        Ok(s)
    }

    pub fn from_f64(q: &[f64], v: &[f64]) -> Result<Self> {
        Self::new(
            q.iter().map(|&x| T::from_f64(x)).collect(),
            v.iter().map(|&x| T::from_f64(x)).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.v).all(|x| x.is_finite())
    }

    /// Lossy projection onto `f64`.
    pub fn to_f64(&self) -> PhaseState<f64> {
        PhaseState {
            q: self.q.iter().map(|x| x.to_f64()).collect(),
            v: self.v.iter().map(|x| x.to_f64()).collect(),
        }
    }

    /// Same state with velocities negated (time reversal).
    pub fn reversed(&self) -> Self {
        Self {
            q: self.q.clone(),
            v: self.v.iter().map(|&x| -x).collect(),
        }
    }

    /// Largest component magnitude over `q` and `v`, in `f64`.
    pub fn max_abs(&self) -> f64 {
        self.q
            .iter()
            .chain(&self.v)
            .map(|x| x.to_f64().abs())
            .fold(0.0, f64::max)
    }

    /// Euclidean distance over the concatenated `(q, v)` vector, in `f64`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .chain(self.v.iter().zip(&other.v))
            .map(|(&a, &b)| (a - b).to_f64().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

type ForceFn<'f, T> = dyn Fn(&[T]) -> Result<Vec<T>> + 'f;

/// Acceleration `a(q)` with an evaluation counter.
///
/// The counter increments by exactly one per [`eval`](Self::eval) call. The
/// field is not `Sync`; concurrent runs each need their own instance.
pub struct AccelField<'f, T> {
    func: Box<ForceFn<'f, T>>,
    count: Cell<u64>,
}

impl<'f, T: Real> AccelField<'f, T> {
    pub fn new(func: impl Fn(&[T]) -> Result<Vec<T>> + 'f) -> Self {
        Self {
            func: Box::new(func),
            count: Cell::new(0),
        }
    }

    /// Field from an infallible closure.
    pub fn from_fn(func: impl Fn(&[T]) -> Vec<T> + 'f) -> Self {
        Self::new(move |q| Ok(func(q)))
    }

    pub fn eval(&self, q: &[T]) -> Result<Vec<T>> {
        self.count.set(self.count.get() + 1);
        let a = (self.func)(q)?;
        if a.len() != q.len() {
            return Err(Error::LengthMismatch {
                expected: q.len(),
                got: a.len(),
            });
        }
        if !a.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("acceleration".into()));
        }
        Ok(a)
    }

    pub fn count(&self) -> u64 {
        self.count.get()
    }

    pub fn reset_count(&self) {
        self.count.set(0);
    }
}

/// `a ≡ 0`.
pub fn free_field<'f, T: Real>() -> AccelField<'f, T> {
    AccelField::from_fn(|q: &[T]| vec![T::zero(); q.len()])
}

/// `a ≡ g`, the same vector everywhere.
pub fn constant_field<'f, T: Real>(g: Vec<T>) -> AccelField<'f, T> {
    AccelField::from_fn(move |_q: &[T]| g.clone())
}

/// Unit harmonic oscillator `a(q) = -q`.
pub fn harmonic_field<'f, T: Real>() -> AccelField<'f, T> {
    AccelField::from_fn(|q: &[T]| q.iter().map(|&x| -x).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter_increments_per_call() {
        let a = harmonic_field::<f64>();
        assert_eq!(a.count(), 0);
        assert_eq!(a.eval(&[2.0]).unwrap(), vec![-2.0]);
        a.eval(&[1.0]).unwrap();
        assert_eq!(a.count(), 2);
        a.reset_count();
        assert_eq!(a.count(), 0);
    }

    #[test]
    fn non_finite_force_is_reported() {
        let a = AccelField::<f64>::from_fn(|q| vec![1.0 / q[0]]);
        assert!(matches!(a.eval(&[0.0]), Err(Error::NonFinite(_))));
        assert_eq!(a.count(), 1);
    }

    #[test]
    fn state_validation() {
        assert!(PhaseState::<f64>::from_f64(&[1.0], &[0.0, 1.0]).is_err());
        assert!(PhaseState::<f64>::from_f64(&[], &[]).is_err());
        assert!(PhaseState::<f64>::from_f64(&[f64::NAN], &[0.0]).is_err());
        let s = PhaseState::<f64>::from_f64(&[1.0, 2.0], &[3.0, -4.0]).unwrap();
        assert_eq!(s.max_abs(), 4.0);
        assert_eq!(s.reversed().v, vec![-3.0, 4.0]);
    }
}
