//! Kepler and harmonic-oscillator testbeds.
//!
//! The Kepler orbit starts at aphelion `q = (1+e, 0)`, `v = (0, √((1−e)/(1+e)))`,
//! which fixes the energy at −1/2 and the period at 2π for every
//! eccentricity, with the major axis on the x-axis. Integration error shows
//! up as a rotation of the Laplace-Runge-Lenz vector; the rotation per period
//! divided by `h^p` tends to a method-specific precession coefficient.

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::method::{integrate, Method, MethodSpec};
use crate::scalar::Real;
use crate::state::{harmonic_field, AccelField, PhaseState};

/// Smallest radius the Kepler force accepts.
pub const SINGULARITY_FLOOR: f64 = 1e-12;

/// Relative agreement between consecutive `Δθ/h^p` ratios that counts as a
/// limit.
pub const COEFFICIENT_TOLERANCE: f64 = 0.01;

/// Smallest usable steps-per-period for precession runs.
pub const MIN_STEPS_PER_PERIOD: u64 = 16;

/// `a(q) = −q/|q|³` in the plane.
pub fn kepler_accel<T: Real>(q: &[T]) -> Result<Vec<T>> {
    if q.len() != 2 {
        return Err(Error::LengthMismatch {
            expected: 2,
            got: q.len(),
        });
    }
    let r2 = q[0] * q[0] + q[1] * q[1];
    let r = r2.sqrt();
    if r.to_f64().is_nan() || r.to_f64() < SINGULARITY_FLOOR {
        return Err(Error::Singularity {
            radius: r.to_f64(),
            floor: SINGULARITY_FLOOR,
        });
    }
    let inv_r3 = T::one() / (r2 * r);
    Ok(vec![-q[0] * inv_r3, -q[1] * inv_r3])
}

pub fn kepler_field<'f, T: Real>() -> AccelField<'f, T> {
    AccelField::new(kepler_accel::<T>)
}

/// Orbit shape; energy −1/2 and period 2π are fixed by construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeplerConfig {
    e: f64,
}

impl KeplerConfig {
    pub const ENERGY: f64 = -0.5;
    pub const PERIOD: f64 = std::f64::consts::TAU;

    pub fn new(e: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&e) {
            return Err(Error::InvalidParameter(format!(
                "eccentricity must lie in [0, 1) (got {e})"
            )));
        }
        Ok(Self { e })
    }

    pub fn eccentricity(&self) -> f64 {
        self.e
    }

    pub fn initial_state<T: Real>(&self) -> PhaseState<T> {
        let e = T::from_f64(self.e);
        let one = T::one();
        PhaseState {
            q: vec![one + e, T::zero()],
            v: vec![T::zero(), ((one - e) / (one + e)).sqrt()],
        }
    }
}

/// Aphelion initial conditions for eccentricity `e`.
pub fn kepler_init<T: Real>(e: f64) -> Result<PhaseState<T>> {
    Ok(KeplerConfig::new(e)?.initial_state())
}

fn radius<T: Real>(s: &PhaseState<T>) -> Result<T> {
    if s.dim() != 2 {
        return Err(Error::LengthMismatch {
            expected: 2,
            got: s.dim(),
        });
    }
    let r = (s.q[0] * s.q[0] + s.q[1] * s.q[1]).sqrt();
    if r.to_f64().is_nan() || r.to_f64() < SINGULARITY_FLOOR {
        return Err(Error::Singularity {
            radius: r.to_f64(),
            floor: SINGULARITY_FLOOR,
        });
    }
    Ok(r)
}

/// `|v|²/2 − 1/|q|`.
pub fn energy<T: Real>(s: &PhaseState<T>) -> Result<T> {
    let r = radius(s)?;
    let half = T::from_f64(0.5);
    Ok(half * (s.v[0] * s.v[0] + s.v[1] * s.v[1]) - T::one() / r)
}

/// Planar Laplace-Runge-Lenz vector `v × L − q/|q|`, `L = q × v`.
pub fn lrl_vector<T: Real>(s: &PhaseState<T>) -> Result<[T; 2]> {
    let r = radius(s)?;
    let (qx, qy, vx, vy) = (s.q[0], s.q[1], s.v[0], s.v[1]);
    let lz = qx * vy - qy * vx;
    Ok([vy * lz - qx / r, -vx * lz - qy / r])
}

/// Signed angle from `from` to `to`, counterclockwise positive, in (−π, π].
pub fn signed_angle<T: Real>(from: [T; 2], to: [T; 2]) -> f64 {
    let cross = (from[0] * to[1] - from[1] * to[0]).to_f64();
    let dot = (from[0] * to[0] + from[1] * to[1]).to_f64();
    let angle = cross.atan2(dot);
    if angle <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        angle
    }
}

/// Rotation of the LRL vector over a whole number of periods.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecessionRecord {
    pub e: f64,
    pub steps_per_period: u64,
    pub periods: u64,
    /// `2π / steps_per_period`.
    pub h: f64,
    /// Signed rotation over the run, radians.
    pub dtheta: f64,
    /// `dtheta / (periods · h^order)`.
    pub ratio: f64,
    pub order: u32,
    pub force_evals: u64,
}

/// Step size `2π / steps` in the backend.
pub fn period_step<T: Real>(steps_per_period: u64) -> T {
    (T::pi() + T::pi()) / T::from_i64(steps_per_period as i64)
}

/// Rotation of the LRL vector after `periods` orbits.
pub fn precession<T: Real>(
    method: &Method<T>,
    e: f64,
    steps_per_period: u64,
    periods: u64,
) -> Result<PrecessionRecord> {
    if e == 0.0 {
        return Err(Error::DegenerateOrbit);
    }
    if steps_per_period < MIN_STEPS_PER_PERIOD {
        return Err(Error::InvalidParameter(format!(
            "steps_per_period must be >= {MIN_STEPS_PER_PERIOD} (got {steps_per_period})"
        )));
    }
    if periods == 0 {
        return Err(Error::InvalidParameter("periods must be >= 1".into()));
    }
    let s0 = kepler_init::<T>(e)?;
    let a = kepler_field::<T>();
    let h = period_step::<T>(steps_per_period);
    let report = integrate(method, &s0, h, steps_per_period * periods, &a)?;
    let dtheta = signed_angle(lrl_vector(&s0)?, lrl_vector(&report.final_state)?);
    let hf = h.to_f64();
    let order = method.order();
    Ok(PrecessionRecord {
        e,
        steps_per_period,
        periods,
        h: hf,
        dtheta,
        ratio: dtheta / (periods as f64 * hf.powi(order as i32)),
        order,
        force_evals: report.force_evals,
    })
}

/// Rotation of the LRL vector over exactly one period.
pub fn precession_per_period<T: Real>(
    method: &Method<T>,
    e: f64,
    steps_per_period: u64,
) -> Result<PrecessionRecord> {
    precession(method, e, steps_per_period, 1)
}

/// Limit of `Δθ/h^p` found along a refinement schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientEstimate {
    pub value: f64,
    /// Steps per period at which the limit was accepted.
    pub steps_per_period: u64,
    pub records: Vec<PrecessionRecord>,
}

/// Refine `h` along `schedule` (steps per period, strictly increasing) until
/// two consecutive `Δθ/h^p` ratios agree within 1%, and return the later one.
pub fn extract_error_coefficient<T: Real>(
    method: &Method<T>,
    e: f64,
    order: u32,
    schedule: &[u64],
) -> Result<CoefficientEstimate> {
    if schedule.len() < 2 {
        return Err(Error::InvalidParameter(
            "schedule needs at least two step counts".into(),
        ));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "schedule must refine h strictly (increasing steps per period)".into(),
        ));
    }
    let mut records: Vec<PrecessionRecord> = Vec::with_capacity(schedule.len());
    for &steps in schedule {
        let mut rec = precession_per_period(method, e, steps)?;
        rec.order = order;
        rec.ratio = rec.dtheta / rec.h.powi(order as i32);
        records.push(rec);
        let ratios: Vec<f64> = records.iter().map(|r| r.ratio).collect();
        if let Some(i) = first_stable(&ratios) {
            return Ok(CoefficientEstimate {
                value: ratios[i],
                steps_per_period: steps,
                records,
            });
        }
    }
    Err(Error::NoLimit {
        ratios: records.iter().map(|r| r.ratio).collect(),
        tolerance: COEFFICIENT_TOLERANCE,
    })
}

/// Index of the first ratio that agrees with its predecessor within
/// [`COEFFICIENT_TOLERANCE`].
pub fn first_stable(ratios: &[f64]) -> Option<usize> {
    ratios
        .windows(2)
        .position(|w| {
            let (prev, last) = (w[0], w[1]);
            last != 0.0 && (last - prev).abs() <= COEFFICIENT_TOLERANCE * last.abs().max(prev.abs())
        })
        .map(|i| i + 1)
}

/// Testbed for convergence-order measurements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum System {
    /// `q'' = −q` from `(1, 0)` over one period 2π.
    Harmonic,
    /// Kepler orbit of eccentricity `e` over one period.
    Kepler { e: f64 },
}

/// Least-squares convergence fit.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub hs: Vec<f64>,
    pub errors: Vec<f64>,
    /// Error level below which a point counts as roundoff-dominated.
    pub floor: f64,
}

/// Slope of `ln y` against `ln x` by least squares.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Roundoff floor `10³ · ε · scale` used to reject fits.
pub fn roundoff_floor<T: Real>(scale: f64) -> f64 {
    1e3 * T::epsilon() * scale
}

/// Global error after one period as a function of `h = 2π / steps`, fitted
/// on log-log axes.
///
/// Harmonic errors are measured against the analytic solution at the exact
/// final time `steps · h`. Kepler errors are measured against an
/// extended-precision `mpe6vv` run with 100 times more steps.
pub fn measured_order<T: Real>(
    method: &Method<T>,
    system: System,
    schedule: &[u64],
) -> Result<OrderFit> {
    if schedule.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "an order fit needs at least 4 step sizes (got {})",
            schedule.len()
        )));
    }
    let floor = roundoff_floor::<T>(1.0);
    let mut hs = Vec::with_capacity(schedule.len());
    let mut errors = Vec::with_capacity(schedule.len());
    for &steps in schedule {
        let h = period_step::<T>(steps);
        let err = match system {
            System::Harmonic => harmonic_period_error(method, h, steps)?,
            System::Kepler { e } => kepler_period_error(method, e, h, steps)?,
        };
        hs.push(h.to_f64());
        errors.push(err);
    }
    if let Some((i, err)) = errors
        .iter()
        .enumerate()
        .find(|(_, &e)| e.is_nan() || e <= floor)
    {
        return Err(Error::RoundoffDominated(format!(
            "error {err:e} at {} steps is at or below the floor {floor:e} for the {} backend",
            schedule[i],
            T::NAME
        )));
    }
    Ok(OrderFit {
        slope: loglog_slope(&hs, &errors),
        hs,
        errors,
        floor,
    })
}

fn harmonic_period_error<T: Real>(method: &Method<T>, h: T, steps: u64) -> Result<f64> {
    let s0 = PhaseState {
        q: vec![T::one()],
        v: vec![T::zero()],
    };
    let a = harmonic_field::<T>();
    let out = integrate(method, &s0, h, steps, &a)?.final_state;
    // Exact solution (cos t, −sin t) at t = 2π + δ.
    let delta = h * T::from_i64(steps as i64) - (T::pi() + T::pi());
    let q_exact = T::one() - T::from_f64(0.5) * delta * delta;
    let v_exact = -delta;
    let dq = (out.q[0] - q_exact).to_f64();
    let dv = (out.v[0] - v_exact).to_f64();
    Ok((dq * dq + dv * dv).sqrt())
}

/// Reference-run refinement factor for Kepler order fits.
pub const KEPLER_REFERENCE_REFINEMENT: u64 = 100;

/// Final state after one period from an extended-precision `mpe6vv` run.
pub fn kepler_reference(e: f64, steps: u64) -> Result<PhaseState<DoubleDouble>> {
    let m = MethodSpec::Mpe6Vv.prepare::<DoubleDouble>();
    let fine = steps * KEPLER_REFERENCE_REFINEMENT;
    let h = period_step::<DoubleDouble>(fine);
    Ok(integrate(&m, &kepler_init(e)?, h, fine, &kepler_field())?.final_state)
}

fn kepler_period_error<T: Real>(method: &Method<T>, e: f64, h: T, steps: u64) -> Result<f64> {
    let out = integrate(method, &kepler_init::<T>(e)?, h, steps, &kepler_field())?.final_state;
    let reference = kepler_reference(e, steps)?;
    let err2: f64 = out
        .q
        .iter()
        .zip(&reference.q)
        .chain(out.v.iter().zip(&reference.v))
        .map(|(&x, r)| {
            let r = T::from_f64(r.hi) + T::from_f64(r.lo);
            (x - r).to_f64().powi(2)
        })
        .sum();
    Ok(err2.sqrt())
}
