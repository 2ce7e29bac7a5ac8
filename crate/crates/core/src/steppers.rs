//! Symmetric second-order base steppers and their compositions.
//!
//! `vv_step` is the kick-drift-kick (velocity) Verlet map and `pv_step` the
//! drift-kick-drift (position) Verlet map. Both are time symmetric, so their
//! local error contains only odd powers of `h`; that is what makes the
//! extrapolation in [`crate::mpe`] work.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::state::{AccelField, PhaseState};

/// Which symmetric second-order map serves as the base product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Base {
    /// Velocity Verlet: half kick, drift, half kick. Two forces standalone.
    Vv,
    /// Position Verlet: half drift, kick, half drift. One force.
    Pv,
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Base::Vv => "vv",
            Base::Pv => "pv",
        })
    }
}

impl FromStr for Base {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vv" => Ok(Base::Vv),
            "pv" => Ok(Base::Pv),
            other => Err(Error::InvalidParameter(format!(
                "unknown base {other:?} (expected vv or pv)"
            ))),
        }
    }
}

pub(crate) fn check_step(h: impl Real) -> Result<()> {
    if !h.is_finite() || h <= Real::zero() {
        return Err(Error::InvalidParameter(format!(
            "step size must be finite and positive (got {:?})",
            h
        )));
    }
    Ok(())
}

/// `x + alpha * y`, componentwise.
#[inline]
pub(crate) fn axpy<T: Real>(x: &[T], alpha: T, y: &[T]) -> Vec<T> {
    x.iter().zip(y).map(|(&xi, &yi)| xi + alpha * yi).collect()
}

/// One velocity-Verlet step starting from a known force `a0 = a(q0)`.
/// Returns the new state and the force at its position.
pub(crate) fn vv_kick_drift_kick<T: Real>(
    q0: &[T],
    v0: &[T],
    a0: &[T],
    h: T,
    a: &AccelField<'_, T>,
) -> Result<(PhaseState<T>, Vec<T>)> {
    let half = h * T::from_f64(0.5);
    let v_half = axpy(v0, half, a0);
    let q1 = axpy(q0, h, &v_half);
    let a1 = a.eval(&q1)?;
    let v1 = axpy(&v_half, half, &a1);
    Ok((PhaseState { q: q1, v: v1 }, a1))
}

/// Velocity Verlet; two force evaluations, `a(q0)` and `a(q1)`.
pub fn vv_step<T: Real>(s: &PhaseState<T>, h: T, a: &AccelField<'_, T>) -> Result<PhaseState<T>> {
    check_step(h)?;
    let a0 = a.eval(&s.q)?;
    Ok(vv_kick_drift_kick(&s.q, &s.v, &a0, h, a)?.0)
}

/// Position Verlet; one force evaluation at the midpoint `q0 + (h/2) v0`.
pub fn pv_step<T: Real>(s: &PhaseState<T>, h: T, a: &AccelField<'_, T>) -> Result<PhaseState<T>> {
    check_step(h)?;
    pv_unchecked(s, h, a)
}

#[inline]
fn pv_unchecked<T: Real>(s: &PhaseState<T>, h: T, a: &AccelField<'_, T>) -> Result<PhaseState<T>> {
    let half = h * T::from_f64(0.5);
    let q_mid = axpy(&s.q, half, &s.v);
    let a_mid = a.eval(&q_mid)?;
    let v1 = axpy(&s.v, h, &a_mid);
    let q1 = axpy(&q_mid, half, &v1);
    Ok(PhaseState { q: q1, v: v1 })
}

/// `k` velocity-Verlet steps of size `h/k` from a known initial force, with
/// each end force reused as the next start force. Uses `k` evaluations.
pub(crate) fn vv_power_from<T: Real>(
    s: &PhaseState<T>,
    a0: &[T],
    k: u32,
    h: T,
    a: &AccelField<'_, T>,
) -> Result<PhaseState<T>> {
    let sub = h / T::from_i64(k as i64);
    let (mut state, mut force) = vv_kick_drift_kick(&s.q, &s.v, a0, sub, a)?;
    for _ in 1..k {
        let (next, next_force) = vv_kick_drift_kick(&state.q, &state.v, &force, sub, a)?;
        state = next;
        force = next_force;
    }
    Ok(state)
}

pub(crate) fn pv_power<T: Real>(
    s: &PhaseState<T>,
    k: u32,
    h: T,
    a: &AccelField<'_, T>,
) -> Result<PhaseState<T>> {
    let sub = h / T::from_i64(k as i64);
    let mut state = pv_unchecked(s, sub, a)?;
    for _ in 1..k {
        state = pv_unchecked(&state, sub, a)?;
    }
    Ok(state)
}

/// `T2^k(h/k)`: the base map applied `k` times at step `h/k`.
///
/// With the VV base the end force of each sub-step is reused by the next,
/// so a standalone call costs `k + 1` evaluations; PV costs `k`.
pub fn power_step<T: Real>(
    base: Base,
    k: u32,
    s: &PhaseState<T>,
    h: T,
    a: &AccelField<'_, T>,
) -> Result<PhaseState<T>> {
    check_step(h)?;
    if k == 0 {
        return Err(Error::InvalidParameter("power k must be >= 1".into()));
    }
    match base {
        Base::Vv => {
            let a0 = a.eval(&s.q)?;
            vv_power_from(s, &a0, k, h, a)
        }
        Base::Pv => pv_power(s, k, h, a),
    }
}

/// Triple-jump weight `1 / (2 - 2^(1/3))`.
pub fn triple_jump_theta() -> f64 {
    1.0 / (2.0 - 2f64.cbrt())
}

fn triple_jump_weights<T: Real>() -> (T, T) {
    // Extended backends need the weight beyond f64: solve θ(2 − 2^{1/3}) = 1
    // via the cube root refined by Newton in T.
    let two = T::from_f64(2.0);
    let mut c = T::from_f64(2f64.cbrt());
    for _ in 0..2 {
        c = c - (c * c * c - two) / (T::from_f64(3.0) * c * c);
    }
    let theta = T::one() / (two - c);
    (theta, T::one() - two * theta)
}

/// Fourth-order symmetric triple jump `T2(θh) T2((1−2θ)h) T2(θh)` of a base
/// map with `θ = 1/(2 − 2^{1/3})`.
///
/// The VV form shares forces between sub-steps (4 evaluations standalone, 3
/// when the end force is carried into the next step); the PV form uses 3.
pub fn triple_jump_step<T: Real>(
    base: Base,
    s: &PhaseState<T>,
    h: T,
    a: &AccelField<'_, T>,
) -> Result<PhaseState<T>> {
    check_step(h)?;
    let (theta, middle) = triple_jump_weights::<T>();
    match base {
        Base::Pv => {
            let s1 = pv_unchecked(s, theta * h, a)?;
            let s2 = pv_unchecked(&s1, middle * h, a)?;
            pv_unchecked(&s2, theta * h, a)
        }
        Base::Vv => {
            let a0 = a.eval(&s.q)?;
            let (s1, a1) = vv_kick_drift_kick(&s.q, &s.v, &a0, theta * h, a)?;
            let (s2, a2) = vv_kick_drift_kick(&s1.q, &s1.v, &a1, middle * h, a)?;
            Ok(vv_kick_drift_kick(&s2.q, &s2.v, &a2, theta * h, a)?.0)
        }
    }
}

/// Forest-Ruth fourth-order symplectic integrator: the position-form triple
/// jump, three force evaluations per step.
pub fn forest_ruth_step<T: Real>(
    s: &PhaseState<T>,
    h: T,
    a: &AccelField<'_, T>,
) -> Result<PhaseState<T>> {
    triple_jump_step(Base::Pv, s, h, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::DoubleDouble;
    use crate::state::{constant_field, free_field, harmonic_field};

    fn st(q: &[f64], v: &[f64]) -> PhaseState<f64> {
        PhaseState::from_f64(q, v).unwrap()
    }

    #[test]
    fn vv_harmonic_by_substitution() {
        let h = 0.1;
        let a = harmonic_field();
        let out = vv_step(&st(&[1.0], &[0.0]), h, &a).unwrap();
        assert!((out.q[0] - (1.0 - h * h / 2.0)).abs() < 1e-15);
        assert!((out.v[0] - (-h + h * h * h / 4.0)).abs() < 1e-15);
        assert_eq!(a.count(), 2);
    }

    #[test]
    fn pv_harmonic_by_substitution() {
        let h = 0.1;
        let a = harmonic_field();
        let out = pv_step(&st(&[1.0], &[0.0]), h, &a).unwrap();
        assert!((out.q[0] - (1.0 - h * h / 2.0)).abs() < 1e-15);
        assert!((out.v[0] + h).abs() < 1e-15);
        assert_eq!(a.count(), 1);
    }

    #[test]
    fn constant_force_is_exact() {
        let g = vec![0.5, -9.81];
        let a = constant_field(g.clone());
        let s = st(&[1.0, 2.0], &[0.25, 3.0]);
        let h = 0.375;
        for out in [
            vv_step(&s, h, &a).unwrap(),
            pv_step(&s, h, &a).unwrap(),
            forest_ruth_step(&s, h, &a).unwrap(),
            triple_jump_step(Base::Vv, &s, h, &a).unwrap(),
            power_step(Base::Vv, 3, &s, h, &a).unwrap(),
        ] {
            for i in 0..2 {
                let q = s.q[i] + h * s.v[i] + 0.5 * h * h * g[i];
                let v = s.v[i] + h * g[i];
                assert!((out.q[i] - q).abs() < 1e-14);
                assert!((out.v[i] - v).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn free_flight_is_exact() {
        let a = free_field();
        let s = st(&[1.0, -2.0], &[0.5, 0.25]);
        let h = 0.5;
        let expect = st(&[1.25, -1.875], &[0.5, 0.25]);
        assert_eq!(vv_step(&s, h, &a).unwrap(), expect);
        assert_eq!(pv_step(&s, h, &a).unwrap(), expect);
        let fr = forest_ruth_step(&s, h, &a).unwrap();
        assert!(fr.distance(&expect) < 1e-15);
    }

    #[test]
    fn power_one_is_the_base() {
        let a = harmonic_field();
        let s = st(&[0.3], &[-0.7]);
        assert_eq!(
            power_step(Base::Vv, 1, &s, 0.2, &a).unwrap(),
            vv_step(&s, 0.2, &a).unwrap()
        );
        assert_eq!(
            power_step(Base::Pv, 1, &s, 0.2, &a).unwrap(),
            pv_step(&s, 0.2, &a).unwrap()
        );
        assert!(power_step(Base::Pv, 0, &s, 0.2, &a).is_err());
    }

    #[test]
    fn pv_square_evaluates_at_quarter_points() {
        let seen = std::cell::RefCell::new(Vec::new());
        let a = AccelField::from_fn(|q: &[f64]| {
            seen.borrow_mut().push(q[0]);
            vec![-q[0]]
        });
        let (x0, v0, h) = (1.0, 0.5, 0.2);
        power_step(Base::Pv, 2, &st(&[x0], &[v0]), h, &a).unwrap();
        let pts = seen.borrow();
        let a14 = -(x0 + h / 4.0 * v0);
        assert!((pts[0] - (x0 + h / 4.0 * v0)).abs() < 1e-15);
        assert!((pts[1] - (x0 + 0.75 * h * v0 + h * h / 4.0 * a14)).abs() < 1e-15);
    }

    #[test]
    fn force_counts() {
        let s = st(&[1.0], &[0.0]);
        let a = harmonic_field();
        for k in 1..6u32 {
            a.reset_count();
            power_step(Base::Vv, k, &s, 0.1, &a).unwrap();
            assert_eq!(a.count(), k as u64 + 1);
            a.reset_count();
            power_step(Base::Pv, k, &s, 0.1, &a).unwrap();
            assert_eq!(a.count(), k as u64);
        }
        a.reset_count();
        forest_ruth_step(&s, 0.1, &a).unwrap();
        assert_eq!(a.count(), 3);
    }

    #[test]
    fn rejects_bad_step() {
        let a = harmonic_field();
        let s = st(&[1.0], &[0.0]);
        assert!(vv_step(&s, 0.0, &a).is_err());
        assert!(pv_step(&s, -0.1, &a).is_err());
        assert!(forest_ruth_step(&s, f64::NAN, &a).is_err());
    }

    #[test]
    fn triple_jump_weight_extended() {
        let (theta, middle) = triple_jump_weights::<DoubleDouble>();
        assert!((theta.to_f64() - triple_jump_theta()).abs() < 1e-15);
        let c = DoubleDouble::from(2.0) - DoubleDouble::one() / theta;
        assert!((c * c * c - DoubleDouble::from(2.0)).to_f64().abs() < 1e-30);
        assert!(
            (theta + theta + middle - DoubleDouble::one())
                .to_f64()
                .abs()
                < 1e-31
        );
    }
}
