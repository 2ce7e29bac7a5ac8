//! Multi-product extrapolation of a symmetric base stepper.
//!
//! `mpe_step` runs every power `T2^{k_i}(h/k_i)` from the same input state
//! and returns the affine combination `Σ c_i s_i` (the weights sum to one).
//! The combination is accumulated per component in ascending `k` with a
//! compensated dot product, so results are bitwise deterministic.

use crate::coeffs::{natural_sequence, weights, Rational, Sequence, Weights};
use crate::error::{Error, Result};
use crate::scalar::{rational_from_ints, Real};
use crate::state::{AccelField, PhaseState};
use crate::steppers::{check_step, pv_power, vv_power_from, Base};

/// A prepared extrapolated integrator: base map, sequence and weights in the
/// scalar backend `T`.
#[derive(Clone, Debug)]
pub struct MpeMethod<T> {
    base: Base,
    seq: Sequence,
    exact: Weights,
    cs: Vec<T>,
}

impl<T: Real> MpeMethod<T> {
    pub fn new(base: Base, seq: Sequence) -> Self {
        let exact = weights(&seq);
        let cs = exact.to_real();
        Self {
            base,
            seq,
            exact,
            cs,
        }
    }

    /// Minimal (natural-sequence) method of order `2n`.
    pub fn natural(base: Base, n: usize) -> Result<Self> {
        Ok(Self::new(base, natural_sequence(n)?))
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn sequence(&self) -> &Sequence {
        &self.seq
    }

    pub fn exact_weights(&self) -> &Weights {
        &self.exact
    }

    pub fn weights(&self) -> &[T] {
        &self.cs
    }

    pub fn order(&self) -> u32 {
        self.seq.order()
    }

    /// Force evaluations per step: `Σ k_i` for PV, `Σ k_i + 1` for VV where
    /// the initial force is shared by every product.
    pub fn forces_per_step(&self) -> u64 {
        let total = self.seq.total_steps();
        match self.base {
            Base::Pv => total,
            Base::Vv => total + 1,
        }
    }
}

/// Componentwise `Σ c_i s_i`.
pub(crate) fn combine<T: Real>(cs: &[T], states: &[PhaseState<T>]) -> Result<PhaseState<T>> {
    let dim = states[0].dim();
    let mut column = vec![T::zero(); states.len()];
    let mut gather = |pick: &dyn Fn(&PhaseState<T>) -> T| -> T {
        for (slot, s) in column.iter_mut().zip(states) {
            *slot = pick(s);
        }
        T::dot(cs, &column)
    };
    let q: Vec<T> = (0..dim).map(|j| gather(&|s| s.q[j])).collect();
    let v: Vec<T> = (0..dim).map(|j| gather(&|s| s.v[j])).collect();
    let out = PhaseState { q, v };
    if !out.is_finite() {
        return Err(Error::NonFinite("extrapolated combination".into()));
    }
    Ok(out)
}

/// One step of the extrapolated integrator.
pub fn mpe_step<T: Real>(
    m: &MpeMethod<T>,
    s: &PhaseState<T>,
    h: T,
    a: &AccelField<'_, T>,
) -> Result<PhaseState<T>> {
    check_step(h)?;
    let shared_force = match m.base {
        Base::Vv => Some(a.eval(&s.q)?),
        Base::Pv => None,
    };
    let products = m
        .seq
        .ks()
        .iter()
        .map(|&k| {
            let product = match &shared_force {
                Some(a0) => vv_power_from(s, a0, k, h, a),
                None => pv_power(s, k, h, a),
            };
            product
                .and_then(|p| {
                    if p.is_finite() {
                        Ok(p)
                    } else {
                        Err(Error::NonFinite("product state".into()))
                    }
                })
                .map_err(|e| Error::ProductFailure {
                    k,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    combine(&m.cs, &products)
}

/// Sixth order by nesting the fourth-order `{1,2}` combination:
/// `T6(h) = −1/15 T4(h) + 16/15 T4(h/2)²`. With the PV base this costs
/// 3 + 6 = 9 evaluations per step.
pub fn nested_t6_step<T: Real>(
    base: Base,
    s: &PhaseState<T>,
    h: T,
    a: &AccelField<'_, T>,
) -> Result<PhaseState<T>> {
    check_step(h)?;
    let t4 = MpeMethod::<T>::new(base, Sequence::new(vec![1, 2])?);
    let half = h * T::from_f64(0.5);
    let full = mpe_step(&t4, s, h, a)?;
    let mid = mpe_step(&t4, s, half, a)?;
    let twice = mpe_step(&t4, &mid, half, a)?;
    let cs: [T; 2] = [nested_weight(-1, 15), nested_weight(16, 15)];
    combine(&cs, &[full, twice])
}

fn nested_weight<T: Real>(p: i64, q: i64) -> T {
    let r: Rational = rational_from_ints(p, q);
    T::from_rational(&r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{free_field, harmonic_field};
    use crate::steppers::power_step;

    fn st(q: &[f64], v: &[f64]) -> PhaseState<f64> {
        PhaseState::from_f64(q, v).unwrap()
    }

    fn method(base: Base, ks: &[u32]) -> MpeMethod<f64> {
        MpeMethod::new(base, Sequence::new(ks.to_vec()).unwrap())
    }

    #[test]
    fn single_product_is_bitwise_the_power() {
        let a = harmonic_field();
        let s = st(&[0.7, -0.2], &[0.1, 0.9]);
        for base in [Base::Vv, Base::Pv] {
            for k in 1..5 {
                let m = method(base, &[k]);
                let x = mpe_step(&m, &s, 0.3, &a).unwrap();
                let y = power_step(base, k, &s, 0.3, &a).unwrap();
                for (u, w) in x.q.iter().chain(&x.v).zip(y.q.iter().chain(&y.v)) {
                    assert_eq!(u.to_bits(), w.to_bits());
                }
            }
        }
    }

    #[test]
    fn free_flight_exact() {
        let a = free_field();
        let s = st(&[1.0], &[0.5]);
        for base in [Base::Vv, Base::Pv] {
            let out = mpe_step(&method(base, &[1, 2, 3]), &s, 0.25, &a).unwrap();
            assert!((out.q[0] - 1.125).abs() < 1e-15);
            assert!((out.v[0] - 0.5).abs() < 1e-15);
        }
        let out = nested_t6_step(Base::Pv, &s, 0.25, &a).unwrap();
        assert!((out.q[0] - 1.125).abs() < 1e-15);
    }

    #[test]
    fn force_counts_follow_triangular_numbers() {
        let a = harmonic_field();
        let s = st(&[1.0], &[0.0]);
        for n in 1..=6usize {
            let tri = (n * (n + 1) / 2) as u64;
            for (base, expect) in [(Base::Pv, tri), (Base::Vv, tri + 1)] {
                let m = MpeMethod::<f64>::natural(base, n).unwrap();
                assert_eq!(m.forces_per_step(), expect);
                a.reset_count();
                mpe_step(&m, &s, 0.1, &a).unwrap();
                assert_eq!(a.count(), expect, "{base} n={n}");
            }
        }
        a.reset_count();
        nested_t6_step(Base::Pv, &s, 0.1, &a).unwrap();
        assert_eq!(a.count(), 9);
    }

    #[test]
    fn failing_product_is_identified() {
        // Fails past q = 1.3: the k = 1 midpoint is 1.25, the k = 2 points
        // are 1.125 and 1.375.
        let a = AccelField::<f64>::new(|q: &[f64]| {
            if q[0] > 1.3 {
                Err(Error::NonFinite("test force".into()))
            } else {
                Ok(vec![0.0])
            }
        });
        let s = st(&[1.0], &[1.0]);
        let err = mpe_step(&method(Base::Pv, &[1, 2]), &s, 0.5, &a).unwrap_err();
        assert!(matches!(err, Error::ProductFailure { k: 2, .. }), "{err}");
    }
}
