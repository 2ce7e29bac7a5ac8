//! Closed-form Runge-Kutta-Nyström integrators obtained by expanding
//! multi-product combinations and consolidating forces.
//!
//! Expanding `Σ c_i T2^{k_i}(h/k_i)` with the VV base gives an explicit RKN
//! map whose final velocity update subtracts forces evaluated at nearby
//! points of the same time level. Those points differ by `O(h³)`, so a
//! signed combination of forces collapses into one evaluation at a shifted
//! point with an `O(h⁶)` force error:
//!
//! | method      | sequence | raw forces | consolidated |
//! |-------------|----------|-----------:|-------------:|
//! | `nystrom4`  | {1,2}    | 4          | 3            |
//! | `mpe6vv`    | {1,2,3}  | 7          | 5            |
//! | `albrecht6` | {1,2,4}  | 8          | 5            |
//!
//! `m4` is the PV-based {1,2} combination written out; it needs no
//! consolidation. The unconsolidated twins are exposed through
//! [`raw_variant`] for equivalence testing.
//!
//! Evaluation points are named by the fraction of the step at which they
//! sit, e.g. `q_1_3` for `q(h/3)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::state::{AccelField, PhaseState};
use crate::steppers::check_step;

/// Unconsolidated VV-based closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RawVariant {
    /// `{1,2}`, four forces.
    Vv12,
    /// `{1,2,3}`, seven forces.
    Vv123,
    /// `{1,2,4}`, eight forces.
    Vv124,
}

impl RawVariant {
    pub fn forces_per_step(self) -> u64 {
        match self {
            RawVariant::Vv12 => 4,
            RawVariant::Vv123 => 7,
            RawVariant::Vv124 => 8,
        }
    }

    pub fn order(self) -> u32 {
        match self {
            RawVariant::Vv12 => 4,
            RawVariant::Vv123 | RawVariant::Vv124 => 6,
        }
    }
}

impl fmt::Display for RawVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RawVariant::Vv12 => "vv12",
            RawVariant::Vv123 => "vv123",
            RawVariant::Vv124 => "vv124",
        })
    }
}

impl FromStr for RawVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vv12" => Ok(RawVariant::Vv12),
            "vv123" => Ok(RawVariant::Vv123),
            "vv124" => Ok(RawVariant::Vv124),
            other => Err(Error::InvalidParameter(format!(
                "unknown raw variant {other:?}"
            ))),
        }
    }
}

fn int<T: Real>(i: i64) -> T {
    T::from_i64(i)
}

/// `Σ w_j a_j` per component, compensated in ascending index order.
fn force_combination<T: Real>(terms: &[(i64, &[T])], dim: usize) -> Vec<T> {
    let weights: Vec<T> = terms.iter().map(|&(w, _)| int(w)).collect();
    let mut column = vec![T::zero(); terms.len()];
    (0..dim)
        .map(|j| {
            for (slot, (_, a)) in column.iter_mut().zip(terms) {
                *slot = a[j];
            }
            T::dot(&weights, &column)
        })
        .collect()
}

/// `q0 + tau·v0 + h2·Σ w_j a_j`, summing the smallest term first.
fn drift<T: Real>(q0: &[T], v0: &[T], tau: T, h2: T, terms: &[(i64, &[T])]) -> Vec<T> {
    let acc = force_combination(terms, q0.len());
    q0.iter()
        .zip(v0)
        .zip(&acc)
        .map(|((&q, &v), &f)| T::sum(&[h2 * f, tau * v, q]))
        .collect()
}

/// `v0 + hc·Σ w_j a_j`.
fn kick<T: Real>(v0: &[T], hc: T, terms: &[(i64, &[T])]) -> Vec<T> {
    let acc = force_combination(terms, v0.len());
    v0.iter()
        .zip(&acc)
        .map(|(&v, &f)| T::sum(&[hc * f, v]))
        .collect()
}

struct Frac<T> {
    h: T,
    h2: T,
}

impl<T: Real> Frac<T> {
    fn new(h: T) -> Self {
        Self { h, h2: h * h }
    }
    /// `h · p / q`
    fn t(&self, p: i64, q: i64) -> T {
        self.h * int(p) / int(q)
    }
    /// `h² / q`
    fn t2(&self, q: i64) -> T {
        self.h2 / int(q)
    }
}

fn finish<T: Real>(q: Vec<T>, v: Vec<T>) -> Result<PhaseState<T>> {
    let s = PhaseState { q, v };
    if !s.is_finite() {
        return Err(Error::NonFinite("closed-form update".into()));
    }
    Ok(s)
}

/// Nyström's fourth-order RKN method, three forces: the VV `{1,2}`
/// combination with `2a(q_2_2) − a(q_1_1)` replaced by
/// `a(q0 + h v0 + h²/2 · a_1_2)`.
pub fn nystrom4_step<T: Real>(
    s: &PhaseState<T>,
    h: T,
    a: &AccelField<'_, T>,
) -> Result<PhaseState<T>> {
    check_step(h)?;
    let f = Frac::new(h);
    let (q0, v0) = (&s.q[..], &s.v[..]);
    let a0 = a.eval(q0)?;
    let a_1_2 = a.eval(&drift(q0, v0, f.t(1, 2), f.t2(8), &[(1, &a0)]))?;
    let a_end = a.eval(&drift(q0, v0, h, f.t2(2), &[(1, &a_1_2)]))?;
    let q = drift(q0, v0, h, f.t2(6), &[(1, &a0), (2, &a_1_2)]);
    let v = kick(v0, f.t(1, 6), &[(1, &a0), (4, &a_1_2), (1, &a_end)]);
    finish(q, v)
}

/// PV-based `{1,2}` combination written out, three forces at `x_1_4`,
/// `x_1_2` and `x_3_4`.
pub fn m4_step<T: Real>(s: &PhaseState<T>, h: T, a: &AccelField<'_, T>) -> Result<PhaseState<T>> {
    check_step(h)?;
    let f = Frac::new(h);
    let (x0, v0) = (&s.q[..], &s.v[..]);
    let a_1_4 = a.eval(&drift(x0, v0, f.t(1, 4), T::zero(), &[]))?;
    let a_1_2 = a.eval(&drift(x0, v0, f.t(1, 2), T::zero(), &[]))?;
    let a_3_4 = a.eval(&drift(x0, v0, f.t(3, 4), f.t2(4), &[(1, &a_1_4)]))?;
    let q = drift(
        x0,
        v0,
        h,
        f.t2(6),
        &[(3, &a_1_4), (-1, &a_1_2), (1, &a_3_4)],
    );
    let v = kick(v0, f.t(1, 3), &[(2, &a_1_4), (-1, &a_1_2), (2, &a_3_4)]);
    finish(q, v)
}

/// Forces shared by the `{1,2,3}` closed forms.
struct Stages123<T> {
    a0: Vec<T>,
    a_1_3: Vec<T>,
    a_1_2: Vec<T>,
    a_2_3: Vec<T>,
}

fn stages_123<T: Real>(
    s: &PhaseState<T>,
    f: &Frac<T>,
    a: &AccelField<'_, T>,
) -> Result<Stages123<T>> {
    let (q0, v0) = (&s.q[..], &s.v[..]);
    let a0 = a.eval(q0)?;
    let a_1_3 = a.eval(&drift(q0, v0, f.t(1, 3), f.t2(18), &[(1, &a0)]))?;
    let a_1_2 = a.eval(&drift(q0, v0, f.t(1, 2), f.t2(8), &[(1, &a0)]))?;
    let a_2_3 = a.eval(&drift(q0, v0, f.t(2, 3), f.t2(9), &[(1, &a0), (1, &a_1_3)]))?;
    Ok(Stages123 {
        a0,
        a_1_3,
        a_1_2,
        a_2_3,
    })
}

fn position_123<T: Real>(s: &PhaseState<T>, f: &Frac<T>, st: &Stages123<T>) -> Vec<T> {
    drift(
        &s.q,
        &s.v,
        f.h,
        f.t2(120),
        &[
            (11, &st.a0),
            (54, &st.a_1_3),
            (-32, &st.a_1_2),
            (27, &st.a_2_3),
        ],
    )
}

/// Sixth-order VV `{1,2,3}` integrator with its three end-of-step forces
/// consolidated into one; five forces.
pub fn mpe6vv_step<T: Real>(
    s: &PhaseState<T>,
    h: T,
    a: &AccelField<'_, T>,
) -> Result<PhaseState<T>> {
    check_step(h)?;
    let f = Frac::new(h);
    let st = stages_123(s, &f, a)?;
    let a_end = a.eval(&drift(
        &s.q,
        &s.v,
        h,
        f.t2(22),
        &[(18, &st.a_1_3), (-16, &st.a_1_2), (9, &st.a_2_3)],
    ))?;
    let q = position_123(s, &f, &st);
    let v = kick(
        &s.v,
        f.t(1, 240),
        &[
            (22, &st.a0),
            (162, &st.a_1_3),
            (-128, &st.a_1_2),
            (162, &st.a_2_3),
            (22, &a_end),
        ],
    );
    finish(q, v)
}

fn quarter_point<T: Real>(s: &PhaseState<T>, f: &Frac<T>, a0: &[T]) -> Vec<T> {
    drift(&s.q, &s.v, f.t(1, 4), f.t2(32), &[(1, a0)])
}

/// Albrecht's sixth-order RKN method, five forces: the VV `{1,2,4}`
/// integrator with the half-step pair and the end-of-step triple both
/// consolidated. The three-quarter point uses the consolidated half-step
/// force; its `O(h⁶)` velocity error is cancelled by the matching shift of
/// the final point, and neither substitution works without the other.
pub fn albrecht6_step<T: Real>(
    s: &PhaseState<T>,
    h: T,
    a: &AccelField<'_, T>,
) -> Result<PhaseState<T>> {
    check_step(h)?;
    let f = Frac::new(h);
    let (q0, v0) = (&s.q[..], &s.v[..]);
    let a0 = a.eval(q0)?;
    let a_1_4 = a.eval(&quarter_point(s, &f, &a0))?;
    let a_1_2 = a.eval(&drift(
        q0,
        v0,
        f.t(1, 2),
        f.t2(24),
        &[(4, &a_1_4), (-1, &a0)],
    ))?;
    let a_3_4 = a.eval(&drift(
        q0,
        v0,
        f.t(3, 4),
        f.t2(32),
        &[(3, &a0), (4, &a_1_4), (2, &a_1_2)],
    ))?;
    let a_end = a.eval(&drift(
        q0,
        v0,
        h,
        f.t2(14),
        &[(6, &a_1_4), (-1, &a_1_2), (2, &a_3_4)],
    ))?;
    let q = drift(
        q0,
        v0,
        h,
        f.t2(90),
        &[(7, &a0), (24, &a_1_4), (6, &a_1_2), (8, &a_3_4)],
    );
    let v = kick(
        v0,
        f.t(1, 90),
        &[
            (7, &a0),
            (32, &a_1_4),
            (12, &a_1_2),
            (32, &a_3_4),
            (7, &a_end),
        ],
    );
    finish(q, v)
}

/// Albrecht's scheme with the consolidated half-step force used at the
/// three-quarter point but the final point left unconsolidated. Seven
/// forces, and only fifth order: the `O(h⁶)` error of the three-quarter
/// force is no longer cancelled. Kept as a diagnostic.
pub fn albrecht6_unpaired_step<T: Real>(
    s: &PhaseState<T>,
    h: T,
    a: &AccelField<'_, T>,
) -> Result<PhaseState<T>> {
    check_step(h)?;
    let f = Frac::new(h);
    let (q0, v0) = (&s.q[..], &s.v[..]);
    let a0 = a.eval(q0)?;
    let a_1_4 = a.eval(&quarter_point(s, &f, &a0))?;
    let a_1_2_star = a.eval(&drift(
        q0,
        v0,
        f.t(1, 2),
        f.t2(24),
        &[(4, &a_1_4), (-1, &a0)],
    ))?;
    let a_2_4 = a.eval(&drift(
        q0,
        v0,
        f.t(1, 2),
        f.t2(16),
        &[(1, &a0), (1, &a_1_4)],
    ))?;
    let a_1_2 = a.eval(&drift(q0, v0, f.t(1, 2), f.t2(8), &[(1, &a0)]))?;
    let a_3_4 = a.eval(&drift(
        q0,
        v0,
        f.t(3, 4),
        f.t2(32),
        &[(3, &a0), (4, &a_1_4), (2, &a_1_2_star)],
    ))?;
    let a_end = a.eval(&drift(
        q0,
        v0,
        h,
        f.t2(14),
        &[(6, &a_1_4), (4, &a_2_4), (-5, &a_1_2), (2, &a_3_4)],
    ))?;
    let q = drift(
        q0,
        v0,
        h,
        f.t2(90),
        &[(7, &a0), (24, &a_1_4), (6, &a_1_2_star), (8, &a_3_4)],
    );
    let v = kick(
        v0,
        f.t(1, 90),
        &[
            (7, &a0),
            (32, &a_1_4),
            (12, &a_1_2_star),
            (32, &a_3_4),
            (7, &a_end),
        ],
    );
    finish(q, v)
}

/// Unconsolidated VV closed forms with 4, 7 and 8 forces.
pub fn raw_variant<T: Real>(
    which: RawVariant,
    s: &PhaseState<T>,
    h: T,
    a: &AccelField<'_, T>,
) -> Result<PhaseState<T>> {
    check_step(h)?;
    let f = Frac::new(h);
    let (q0, v0) = (&s.q[..], &s.v[..]);
    match which {
        RawVariant::Vv12 => {
            let a0 = a.eval(q0)?;
            let a_1_2 = a.eval(&drift(q0, v0, f.t(1, 2), f.t2(8), &[(1, &a0)]))?;
            let a_1_1 = a.eval(&drift(q0, v0, h, f.t2(2), &[(1, &a0)]))?;
            let a_2_2 = a.eval(&drift(q0, v0, h, f.t2(4), &[(1, &a0), (1, &a_1_2)]))?;
            let q = drift(q0, v0, h, f.t2(6), &[(1, &a0), (2, &a_1_2)]);
            let v = kick(
                v0,
                f.t(1, 6),
                &[(1, &a0), (4, &a_1_2), (2, &a_2_2), (-1, &a_1_1)],
            );
            finish(q, v)
        }
        RawVariant::Vv123 => {
            let st = stages_123(s, &f, a)?;
            let a_3_3 = a.eval(&drift(
                q0,
                v0,
                h,
                f.t2(18),
                &[(3, &st.a0), (4, &st.a_1_3), (2, &st.a_2_3)],
            ))?;
            let a_2_2 = a.eval(&drift(q0, v0, h, f.t2(4), &[(1, &st.a0), (1, &st.a_1_2)]))?;
            let a_1_1 = a.eval(&drift(q0, v0, h, f.t2(2), &[(1, &st.a0)]))?;
            let q = position_123(s, &f, &st);
            let v = kick(
                v0,
                f.t(1, 240),
                &[
                    (22, &st.a0),
                    (162, &st.a_1_3),
                    (-128, &st.a_1_2),
                    (162, &st.a_2_3),
                    (81, &a_3_3),
                    (-64, &a_2_2),
                    (5, &a_1_1),
                ],
            );
            finish(q, v)
        }
        RawVariant::Vv124 => {
            let a0 = a.eval(q0)?;
            let a_1_4 = a.eval(&quarter_point(s, &f, &a0))?;
            let a_2_4 = a.eval(&drift(
                q0,
                v0,
                f.t(1, 2),
                f.t2(16),
                &[(1, &a0), (1, &a_1_4)],
            ))?;
            let a_1_2 = a.eval(&drift(q0, v0, f.t(1, 2), f.t2(8), &[(1, &a0)]))?;
            let a_3_4 = a.eval(&drift(
                q0,
                v0,
                f.t(3, 4),
                f.t2(32),
                &[(3, &a0), (4, &a_1_4), (2, &a_2_4)],
            ))?;
            let a_4_4 = a.eval(&drift(
                q0,
                v0,
                h,
                f.t2(16),
                &[(2, &a0), (3, &a_1_4), (2, &a_2_4), (1, &a_3_4)],
            ))?;
            let a_2_2 = a.eval(&drift(q0, v0, h, f.t2(4), &[(1, &a0), (1, &a_1_2)]))?;
            let a_1_1 = a.eval(&drift(q0, v0, h, f.t2(2), &[(1, &a0)]))?;
            let q = drift(
                q0,
                v0,
                h,
                f.t2(90),
                &[
                    (7, &a0),
                    (24, &a_1_4),
                    (16, &a_2_4),
                    (-10, &a_1_2),
                    (8, &a_3_4),
                ],
            );
            let v = kick(
                v0,
                f.t(1, 90),
                &[
                    (7, &a0),
                    (32, &a_1_4),
                    (32, &a_2_4),
                    (-20, &a_1_2),
                    (32, &a_3_4),
                    (16, &a_4_4),
                    (-10, &a_2_2),
                    (1, &a_1_1),
                ],
            );
            finish(q, v)
        }
    }
}

/// `q_2_2 − q_1_1 = h²/4 (a_1_2 − a0)`, the `O(h³)` offset between the two
/// end-of-step evaluation points of the VV `{1,2}` integrator.
pub fn delta_q2<T: Real>(s: &PhaseState<T>, h: T, a: &AccelField<'_, T>) -> Result<Vec<T>> {
    check_step(h)?;
    let f = Frac::new(h);
    let a0 = a.eval(&s.q)?;
    let a_1_2 = a.eval(&drift(&s.q, &s.v, f.t(1, 2), f.t2(8), &[(1, &a0)]))?;
    Ok(force_combination(&[(1, &a_1_2), (-1, &a0)], s.dim())
        .into_iter()
        .map(|x| f.t2(4) * x)
        .collect())
}

/// `q_3_3 − q_1_1 = h²/9 (2a_1_3 + a_2_3 − 3a0)` for the VV `{1,2,3}`
/// integrator.
pub fn delta_q3<T: Real>(s: &PhaseState<T>, h: T, a: &AccelField<'_, T>) -> Result<Vec<T>> {
    check_step(h)?;
    let f = Frac::new(h);
    let (q0, v0) = (&s.q[..], &s.v[..]);
    let a0 = a.eval(q0)?;
    let a_1_3 = a.eval(&drift(q0, v0, f.t(1, 3), f.t2(18), &[(1, &a0)]))?;
    let a_2_3 = a.eval(&drift(q0, v0, f.t(2, 3), f.t2(9), &[(1, &a0), (1, &a_1_3)]))?;
    Ok(
        force_combination(&[(2, &a_1_3), (1, &a_2_3), (-3, &a0)], s.dim())
            .into_iter()
            .map(|x| f.t2(9) * x)
            .collect(),
    )
}

type StepFn<T> = fn(&PhaseState<T>, T, &AccelField<'_, T>) -> Result<PhaseState<T>>;

/// Position shift `δq` as a function of the step.
pub type ShiftFn<T> = fn(&PhaseState<T>, T, &AccelField<'_, T>) -> Result<Vec<T>>;

/// A consolidated integrator and the unconsolidated twin it was derived
/// from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConsolidationPair {
    Nystrom4,
    Mpe6Vv,
    Albrecht6,
}

impl ConsolidationPair {
    pub const ALL: [ConsolidationPair; 3] = [
        ConsolidationPair::Nystrom4,
        ConsolidationPair::Mpe6Vv,
        ConsolidationPair::Albrecht6,
    ];

    pub fn raw(self) -> RawVariant {
        match self {
            ConsolidationPair::Nystrom4 => RawVariant::Vv12,
            ConsolidationPair::Mpe6Vv => RawVariant::Vv123,
            ConsolidationPair::Albrecht6 => RawVariant::Vv124,
        }
    }

    /// Exponent of `h` in the per-step state difference, as published.
    pub fn expected_gap_order(self) -> u32 {
        match self {
            ConsolidationPair::Nystrom4 => 6,
            ConsolidationPair::Mpe6Vv | ConsolidationPair::Albrecht6 => 7,
        }
    }

    fn consolidated<T: Real>(self) -> StepFn<T> {
        match self {
            ConsolidationPair::Nystrom4 => nystrom4_step,
            ConsolidationPair::Mpe6Vv => mpe6vv_step,
            ConsolidationPair::Albrecht6 => albrecht6_step,
        }
    }

    /// Euclidean `(q, v)` distance between one consolidated and one raw step.
    pub fn gap<T: Real>(self, s: &PhaseState<T>, h: T, a: &AccelField<'_, T>) -> Result<f64> {
        let c = (self.consolidated::<T>())(s, h, a)?;
        let r = raw_variant(self.raw(), s, h, a)?;
        Ok(c.distance(&r))
    }
}

impl fmt::Display for ConsolidationPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ConsolidationPair::Nystrom4 => "nystrom4",
            ConsolidationPair::Mpe6Vv => "mpe6vv",
            ConsolidationPair::Albrecht6 => "albrecht6",
        };
        write!(f, "{name}/raw:{}", self.raw())
    }
}

/// Log-log fit of a quantity against `h`, restricted to points above a
/// roundoff floor.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerFit {
    pub slope: f64,
    pub hs: Vec<f64>,
    pub values: Vec<f64>,
    /// Points at or below this level were dropped.
    pub floor: f64,
}

/// Fit `values ~ C h^p` using only points above `floor`; at least three
/// must survive.
pub fn fit_above_floor(hs: &[f64], values: &[f64], floor: f64) -> Result<PowerFit> {
    let (hs, values): (Vec<f64>, Vec<f64>) = hs
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > floor)
        .map(|(&h, &v)| (h, v))
        .unzip();
    if hs.len() < 3 {
        return Err(Error::RoundoffDominated(format!(
            "only {} points above the floor {floor:e}",
            hs.len()
        )));
    }
    Ok(PowerFit {
        slope: crate::orbit::loglog_slope(&hs, &values),
        hs,
        values,
        floor,
    })
}

/// Slope of the consolidated-vs-raw per-step gap over `hs`, fitted where the
/// gap exceeds `10³ ε |s|`.
pub fn gap_order<T: Real>(
    pair: ConsolidationPair,
    s: &PhaseState<T>,
    hs: &[f64],
    a: &AccelField<'_, T>,
) -> Result<PowerFit> {
    let gaps = hs
        .iter()
        .map(|&h| pair.gap(s, T::from_f64(h), a))
        .collect::<Result<Vec<_>>>()?;
    fit_above_floor(hs, &gaps, 1e3 * T::epsilon() * s.max_abs())
}

/// Slope of `|δq|` over `hs` for one of the shift functions.
pub fn shift_order<T: Real>(
    shift: ShiftFn<T>,
    s: &PhaseState<T>,
    hs: &[f64],
    a: &AccelField<'_, T>,
) -> Result<PowerFit> {
    let sizes = hs
        .iter()
        .map(|&h| {
            let d = shift(s, T::from_f64(h), a)?;
            Ok(d.iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt())
        })
        .collect::<Result<Vec<_>>>()?;
    fit_above_floor(hs, &sizes, 1e3 * T::epsilon() * s.max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{constant_field, free_field, harmonic_field};

    type Stepper = fn(&PhaseState<f64>, f64, &AccelField<'_, f64>) -> Result<PhaseState<f64>>;

    fn all() -> Vec<(&'static str, Stepper, u64)> {
        vec![
            ("nystrom4", nystrom4_step, 3),
            ("m4", m4_step, 3),
            ("mpe6vv", mpe6vv_step, 5),
            ("albrecht6", albrecht6_step, 5),
            ("albrecht6-unpaired", albrecht6_unpaired_step, 7),
            ("vv12", |s, h, a| raw_variant(RawVariant::Vv12, s, h, a), 4),
            (
                "vv123",
                |s, h, a| raw_variant(RawVariant::Vv123, s, h, a),
                7,
            ),
            (
                "vv124",
                |s, h, a| raw_variant(RawVariant::Vv124, s, h, a),
                8,
            ),
        ]
    }

    #[test]
    fn force_counts() {
        let s = PhaseState::from_f64(&[1.0, 0.5], &[0.0, 1.0]).unwrap();
        let a = harmonic_field();
        for (name, step, count) in all() {
            a.reset_count();
            step(&s, 0.1, &a).unwrap();
            assert_eq!(a.count(), count, "{name}");
        }
    }

    #[test]
    fn free_and_constant_force_flight_are_exact() {
        let s = PhaseState::from_f64(&[1.0, -1.0], &[0.25, 2.0]).unwrap();
        let h = 0.5;
        let free = free_field();
        let g = vec![-1.5, 0.75];
        let constant = constant_field(g.clone());
        for (name, step, _) in all() {
            let out = step(&s, h, &free).unwrap();
            for i in 0..2 {
                assert!((out.q[i] - (s.q[i] + h * s.v[i])).abs() < 1e-15, "{name}");
                assert_eq!(out.v[i], s.v[i], "{name}");
            }
            let out = step(&s, h, &constant).unwrap();
            for i in 0..2 {
                let q = s.q[i] + h * s.v[i] + 0.5 * h * h * g[i];
                assert!((out.q[i] - q).abs() < 1e-14, "{name}");
                assert!((out.v[i] - (s.v[i] + h * g[i])).abs() < 1e-14, "{name}");
            }
        }
    }

    #[test]
    fn delta_formulas_match_point_differences() {
        // q_2_2 − q_1_1 from the explicit points.
        let a = AccelField::<f64>::from_fn(|q| vec![-q[0] - q[0] * q[0] * q[0]]);
        let s = PhaseState::from_f64(&[0.8], &[0.3]).unwrap();
        let h = 0.2;
        let a0 = -0.8 - 0.512;
        let q12 = 0.8 + h / 2.0 * 0.3 + h * h / 8.0 * a0;
        let a12 = -q12 - q12 * q12 * q12;
        let q11 = 0.8 + h * 0.3 + h * h / 2.0 * a0;
        let q22 = 0.8 + h * 0.3 + h * h / 4.0 * (a0 + a12);
        let d = delta_q2(&s, h, &a).unwrap();
        assert!((d[0] - (q22 - q11)).abs() < 1e-15);
        assert!(delta_q3(&s, h, &a).unwrap()[0].abs() > 0.0);
    }

    #[test]
    fn raw_variant_names_round_trip() {
        for v in [RawVariant::Vv12, RawVariant::Vv123, RawVariant::Vv124] {
            assert_eq!(v.to_string().parse::<RawVariant>().unwrap(), v);
        }
        assert!("vv13".parse::<RawVariant>().is_err());
    }
}
